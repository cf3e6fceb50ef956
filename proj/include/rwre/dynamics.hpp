#ifndef RWRE_DYNAMICS_HPP
#define RWRE_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/lattice.hpp"
#include "rwre/prf.hpp"

namespace rwre {

/**
 * The interval partition {I_i} of [0,1): cell i (0-based) is
 * [endpoints[i], endpoints[i+1]).  Cells of zero width carry q_i = 0 and
 * are never returned by locate.
 */
struct FiberPartition {
    std::vector<double> endpoints; // a_0 = 0, ..., a_N = 1

    int cell_count() const { return static_cast<int>(endpoints.size()) - 1; }
    double width(int i) const
    {
        return endpoints[static_cast<std::size_t>(i) + 1] - endpoints[static_cast<std::size_t>(i)];
    }
};

/// Cumulative sums of q, with the final endpoint forced to 1 exactly.
inline FiberPartition build_partition(const std::vector<double>& q)
{
    if (q.empty()) throw std::invalid_argument("build_partition: empty kernel");
    double total = 0.0;
    for (double qi : q) {
        if (qi < 0.0) throw std::invalid_argument("build_partition: negative entry");
        total += qi;
    }
    if (std::abs(total - 1.0) > kEpsBisto)
        throw std::invalid_argument("build_partition: kernel does not sum to 1");

    FiberPartition part;
    part.endpoints.resize(q.size() + 1);
    part.endpoints[0] = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        acc += q[i];
        part.endpoints[i + 1] = std::min(acc, 1.0);
    }
    part.endpoints.back() = 1.0;
    // guard monotonicity against rounding in the running sum
    for (std::size_t i = 1; i < part.endpoints.size(); ++i)
        part.endpoints[i] = std::max(part.endpoints[i], part.endpoints[i - 1]);
    return part;
}

/// The unique cell index i with a_i <= s < a_{i+1}; binary search,
/// half-open convention, empty cells skipped.
inline int locate(double s, const FiberPartition& part)
{
    if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("locate: s outside [0,1)");
    auto it = std::upper_bound(part.endpoints.begin(), part.endpoints.end(), s);
    return static_cast<int>(it - part.endpoints.begin()) - 1;
}

/// A point of the skew-product phase space: fiber coordinate s plus the
/// environment in the walker's frame.  view.origin_offset is the walk
/// position X_{step_count}.
struct SkewState {
    double s = 0.0;
    EnvironmentView view;
    std::int64_t step_count = 0;
};

inline SkewState make_state(double s, EnvironmentView view)
{
    if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("make_state: s outside [0,1)");
    return SkewState{s, std::move(view), 0};
}

/// D(s, omega) = d_{i(s,omega)}.
inline Vec displacement(double s, const EnvironmentView& view)
{
    FiberPartition part = build_partition(kernel_at(view, zero_vec(view.lambda.dims)));
    return view.lambda[locate(s, part)];
}

/**
 * The map on the fibers: the affine rescaling of the cell containing s
 * onto [0,1), phi(s) = (s - a_{i-1}) / q_i.  Output clamped below 1
 * against rounding at the right edge.
 */
inline double fiber_map_in(double s, const FiberPartition& part)
{
    int i = locate(s, part);
    double w = part.width(i);
    double out = (s - part.endpoints[static_cast<std::size_t>(i)]) / w;
    if (out >= 1.0) out = std::nextafter(1.0, 0.0);
    if (out < 0.0) out = 0.0;
    return out;
}

inline double fiber_map(double s, const EnvironmentView& view)
{
    FiberPartition part = build_partition(kernel_at(view, zero_vec(view.lambda.dims)));
    return fiber_map_in(s, part);
}

/// One application of T(s, omega) = (phi(s,omega), tau_{D(s,omega)} omega).
inline SkewState step(const SkewState& state)
{
    FiberPartition part =
        build_partition(kernel_at(state.view, zero_vec(state.view.lambda.dims)));
    int i = locate(state.s, part);
    double s1 = fiber_map_in(state.s, part);
    EnvironmentView v1 = shift(state.view, state.view.lambda[i]);
    return SkewState{s1, std::move(v1), state.step_count + 1};
}

/**
 * The cocycle of the displacement function: X_0 = 0 and
 * X_n = sum_{k<n} D o T^k.  Returns X_0, ..., X_n; after k steps the
 * view's origin offset equals X_k plus the starting offset.
 */
inline std::vector<Vec> cocycle(const SkewState& state0, int n)
{
    if (n < 0) throw std::invalid_argument("cocycle: n must be >= 0");
    std::vector<Vec> xs;
    xs.reserve(static_cast<std::size_t>(n) + 1);
    Vec start = state0.view.origin_offset;
    xs.push_back(zero_vec(start.dims));
    SkewState st = state0;
    for (int k = 0; k < n; ++k) {
        st = step(st);
        xs.push_back(st.view.origin_offset - start);
    }
    return xs;
}

/// Multi-index (i_0, ..., i_{n-1}), 0-based cell indices.
struct CylinderIndex {
    std::vector<int> indices;
};

/**
 * Lebesgue measure of the cylinder interval I_i(omega): the product of
 * q_{i_k}(omega_k) along the path the multi-index determines; zero as soon
 * as a factor vanishes.
 */
inline double cylinder_measure(const EnvironmentView& view, const CylinderIndex& idx)
{
    if (idx.indices.empty())
        throw std::invalid_argument("cylinder_measure: index must be nonempty");
    double prod = 1.0;
    EnvironmentView v = view;
    for (int i : idx.indices) {
        if (i < 0 || i >= v.lambda.size())
            throw std::invalid_argument("cylinder_measure: cell index out of range");
        double qi = kernel_at(v, zero_vec(v.lambda.dims))[static_cast<std::size_t>(i)];
        if (qi == 0.0) return 0.0;
        prod *= qi;
        v = shift(v, v.lambda[i]);
    }
    return prod;
}

/**
 * Total length of the preimage of [b, c) under the fiber map, summed over
 * cells: within cell i the preimage is [a_{i-1} + b q_i, a_{i-1} + c q_i),
 * of length (c - b) q_i, so the sum equals c - b whenever the partition is
 * normalized (Lebesgue measure is preserved).  Computed literally per cell.
 */
inline double preimage_length(const FiberPartition& part, double b, double c)
{
    if (!(b >= 0.0 && b <= c && c <= 1.0))
        throw std::invalid_argument("preimage_length: need 0 <= b <= c <= 1");
    double total = 0.0;
    for (int i = 0; i < part.cell_count(); ++i) {
        double w = part.width(i);
        double lo = part.endpoints[static_cast<std::size_t>(i)] + b * w;
        double hi = part.endpoints[static_cast<std::size_t>(i)] + c * w;
        total += hi - lo;
    }
    return total;
}

enum class OrbitMode { Exact, Refresh, Auto };

/**
 * Birkhoff average of f(s,omega) = -log q_{i(s,omega)} along an orbit:
 * (1/n) sum_{k<n} -log q_{i_k}, which equals -(1/n) log of the realized
 * cylinder's measure.
 *
 * A double-precision s is consumed after ~52 expansion steps, so beyond
 * 40 steps the cell choice is refreshed with a fresh uniform per step
 * (equivalent in law; the fiber map conditions s back to uniform).
 * OrbitMode::Exact forces pure orbit iteration for oracle tests.
 */
inline double info_rate(const SkewState& state0, int n, OrbitMode mode = OrbitMode::Auto)
{
    if (n < 1) throw std::invalid_argument("info_rate: n must be >= 1");
    bool refresh = (mode == OrbitMode::Refresh) || (mode == OrbitMode::Auto && n > 40);

    std::uint64_t stream = 0;
    if (refresh) {
        std::uint64_t sbits;
        static_assert(sizeof(double) == sizeof(std::uint64_t));
        std::memcpy(&sbits, &state0.s, sizeof(sbits));
        stream = prf::key(state0.view.spec->seed, prf::tag_orbit, sbits);
    }

    double acc = 0.0;
    SkewState st = state0;
    for (int k = 0; k < n; ++k) {
        FiberPartition part =
            build_partition(kernel_at(st.view, zero_vec(st.view.lambda.dims)));
        double s = refresh ? prf::to_unit(prf::mix64(prf::combine(stream,
                                                 static_cast<std::uint64_t>(k))))
                           : st.s;
        int i = locate(s, part);
        double qi = part.width(i);
        if (qi <= 0.0) return std::numeric_limits<double>::infinity();
        acc -= std::log(qi);
        double s1 = refresh ? s : fiber_map_in(st.s, part);
        st = SkewState{s1, shift(st.view, st.view.lambda[i]), st.step_count + 1};
    }
    return acc / static_cast<double>(n);
}

} // namespace rwre

#endif // RWRE_DYNAMICS_HPP
