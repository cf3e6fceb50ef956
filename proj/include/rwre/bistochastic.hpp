#ifndef RWRE_BISTOCHASTIC_HPP
#define RWRE_BISTOCHASTIC_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwre/lattice.hpp"

namespace rwre {

inline constexpr double kEpsBisto = 1e-10;
inline constexpr double kEpsDrift = 1e-10;

/// A square nonnegative matrix indexed by a base displacement set Lambda_0,
/// with rows and columns each summing to 1.
struct LocalMatrix {
    std::vector<Vec> base; // Lambda_0, size n0
    std::vector<double> entries; // row-major, n0 x n0

    int n0() const { return static_cast<int>(base.size()); }
    double at(int r, int c) const
    {
        return entries[static_cast<std::size_t>(r) * static_cast<std::size_t>(n0()) +
                       static_cast<std::size_t>(c)];
    }
    double& at(int r, int c)
    {
        return entries[static_cast<std::size_t>(r) * static_cast<std::size_t>(n0()) +
                       static_cast<std::size_t>(c)];
    }

    double max_row_deviation() const
    {
        double dev = 0.0;
        for (int r = 0; r < n0(); ++r) {
            double s = 0.0;
            for (int c = 0; c < n0(); ++c) s += at(r, c);
            dev = std::max(dev, std::abs(s - 1.0));
        }
        return dev;
    }
    double max_col_deviation() const
    {
        double dev = 0.0;
        for (int c = 0; c < n0(); ++c) {
            double s = 0.0;
            for (int r = 0; r < n0(); ++r) s += at(r, c);
            dev = std::max(dev, std::abs(s - 1.0));
        }
        return dev;
    }

    void validate(double tol = kEpsBisto) const
    {
        if (entries.size() != static_cast<std::size_t>(n0()) * static_cast<std::size_t>(n0()))
            throw std::invalid_argument("LocalMatrix: entry count mismatch");
        for (double e : entries)
            if (e < 0.0) throw std::invalid_argument("LocalMatrix: negative entry");
        if (max_row_deviation() > tol)
            throw std::invalid_argument("LocalMatrix: row sums deviate beyond tolerance");
        if (max_col_deviation() > tol)
            throw std::invalid_argument("LocalMatrix: column sums deviate beyond tolerance");
    }
};

/**
 * Alternately rescales rows then columns of a strictly positive matrix to
 * unit sum until the largest row/column sum deviation falls below tol.
 */
inline LocalMatrix sinkhorn_normalize(std::vector<double> raw, std::vector<Vec> base,
                                      double tol, int max_iter)
{
    const int n = static_cast<int>(base.size());
    if (raw.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw std::invalid_argument("sinkhorn_normalize: matrix size mismatch");
    if (tol <= 0.0) throw std::invalid_argument("sinkhorn_normalize: tol must be positive");
    for (double e : raw)
        if (!(e > 0.0)) throw std::invalid_argument("sinkhorn_normalize: nonpositive entry");

    LocalMatrix m{std::move(base), std::move(raw)};
    for (int it = 0; it < max_iter; ++it) {
        if (std::max(m.max_row_deviation(), m.max_col_deviation()) < tol) return m;
        for (int r = 0; r < n; ++r) {
            double s = 0.0;
            for (int c = 0; c < n; ++c) s += m.at(r, c);
            for (int c = 0; c < n; ++c) m.at(r, c) /= s;
        }
        for (int c = 0; c < n; ++c) {
            double s = 0.0;
            for (int r = 0; r < n; ++r) s += m.at(r, c);
            for (int r = 0; r < n; ++r) m.at(r, c) /= s;
        }
    }
    if (std::max(m.max_row_deviation(), m.max_col_deviation()) < tol) return m;
    throw std::runtime_error("sinkhorn_normalize: no convergence after " +
                             std::to_string(max_iter) + " iterations");
}

using Permutation = std::vector<int>; // p[r] = image column of row r

inline std::vector<Permutation> all_permutations(int n)
{
    if (n > 6) throw std::invalid_argument("all_permutations: capped at n <= 6");
    Permutation p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::vector<Permutation> out;
    do {
        out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

/**
 * Convex combination of permutation matrices: sum_k weights_k * P(perms_k).
 * With require_coverage, every matrix entry must be hit by some permutation
 * (this makes every entry of the result strictly positive).
 */
inline LocalMatrix birkhoff_combine(const std::vector<double>& weights,
                                    const std::vector<Permutation>& perms,
                                    std::vector<Vec> base,
                                    bool require_coverage = false)
{
    if (weights.empty() || weights.size() != perms.size())
        throw std::invalid_argument("birkhoff_combine: weight/permutation length mismatch");
    const int n = static_cast<int>(base.size());
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("birkhoff_combine: weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > kEpsBisto)
        throw std::invalid_argument("birkhoff_combine: weights do not sum to 1");

    std::vector<char> hit(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    LocalMatrix m{std::move(base),
                  std::vector<double>(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0)};
    for (std::size_t k = 0; k < perms.size(); ++k) {
        const Permutation& p = perms[k];
        if (static_cast<int>(p.size()) != n)
            throw std::invalid_argument("birkhoff_combine: permutation size mismatch");
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        for (int r = 0; r < n; ++r) {
            int c = p[static_cast<std::size_t>(r)];
            if (c < 0 || c >= n || seen[static_cast<std::size_t>(c)])
                throw std::invalid_argument("birkhoff_combine: not a permutation");
            seen[static_cast<std::size_t>(c)] = 1;
            m.at(r, c) += weights[k];
            hit[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) +
                static_cast<std::size_t>(c)] = 1;
        }
    }
    if (require_coverage) {
        for (char h : hit)
            if (!h)
                throw std::invalid_argument(
                    "birkhoff_combine: permutation list does not cover every entry");
    }
    return m;
}

} // namespace rwre

#endif // RWRE_BISTOCHASTIC_HPP
