#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "rwre/prf.hpp"

using namespace rwre;

TEST_CASE("mix64 is a bijection witness: no collisions on a dense probe")
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(prf::mix64(i));
    CHECK(seen.size() == 100000);
}

TEST_CASE("key is deterministic and sensitive to every word")
{
    CHECK(prf::key(1, prf::tag_walk_step, 2, 3) == prf::key(1, prf::tag_walk_step, 2, 3));
    CHECK(prf::key(1, prf::tag_walk_step, 2, 3) != prf::key(1, prf::tag_walk_step, 3, 2));
    CHECK(prf::key(1, prf::tag_walk_step, 2) != prf::key(2, prf::tag_walk_step, 2));
    CHECK(prf::key(1, prf::tag_walk_step, 2) != prf::key(1, prf::tag_env_site, 2));
}

TEST_CASE("to_unit lands in [0,1) including extremes")
{
    CHECK(prf::to_unit(0) == 0.0);
    CHECK(prf::to_unit(~std::uint64_t{0}) < 1.0);
    CHECK(prf::to_unit(~std::uint64_t{0}) > 0.9999999999);
}

TEST_CASE("uniform stream passes coarse moment checks")
{
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = prf::uniform(42, prf::tag_walk_step, static_cast<std::uint64_t>(i));
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    // 1/2 and 1/12, each within ~6 standard errors
    CHECK(std::abs(mean - 0.5) < 6.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("streams with different tags are decorrelated")
{
    const int n = 50000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double a = prf::uniform(7, prf::tag_walk_step, static_cast<std::uint64_t>(i)) - 0.5;
        double b = prf::uniform(7, prf::tag_env_site, static_cast<std::uint64_t>(i)) - 0.5;
        acc += a * b;
    }
    // correlation ~ N(0, 1/(12 sqrt(n))); 6 sigma band
    CHECK(std::abs(acc / n) < 6.0 / (12.0 * std::sqrt(static_cast<double>(n))));
}
