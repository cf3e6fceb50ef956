#ifndef RWRE_WALKER_HPP
#define RWRE_WALKER_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "rwre/dynamics.hpp"
#include "rwre/environment.hpp"
#include "rwre/lattice.hpp"
#include "rwre/prf.hpp"

namespace rwre {

/// One realized walk; env_seed and walk_stream are enough to replay it.
struct Trajectory {
    std::vector<Vec> positions; // X_0 = 0, ..., X_n
    std::uint64_t env_seed = 0;
    std::uint64_t walk_stream = 0;

    int n_steps() const { return static_cast<int>(positions.size()) - 1; }
};

enum class EnsembleMode { Quenched, Annealed };

struct WalkEnsemble {
    std::vector<Trajectory> trajectories;
    EnsembleMode mode = EnsembleMode::Annealed;
    int n_steps = 0;
    EnvironmentSpec spec; // family template; per-walk env seeds derive from it

    int n_walks() const { return static_cast<int>(trajectories.size()); }
};

/// Inverse-CDF sample of the local kernel: x + d_i with
/// i = locate(u, partition(kernel_at(view, x))).
inline Vec quenched_step(const Vec& x, const EnvironmentView& view, double u)
{
    FiberPartition part = build_partition(kernel_at(view, x));
    return x + view.lambda[locate(u, part)];
}

namespace detail {

// Kernels are pure in (spec, site); memoizing partitions by absolute site
// is transparent and pays off heavily on recurrent walks.
struct PartitionCache {
    const EnvironmentView& view;
    std::unordered_map<Vec, FiberPartition, VecHash> memo;

    explicit PartitionCache(const EnvironmentView& v) : view(v) {}

    const FiberPartition& at(const Vec& x)
    {
        auto it = memo.find(x);
        if (it != memo.end()) return it->second;
        auto [pos, inserted] = memo.emplace(x, build_partition(kernel_at(view, x)));
        return pos->second;
    }
};

} // namespace detail

/**
 * Iterates the quenched chain for n steps from the origin, invoking
 * fn(k, X_k) for k = 0..n without materializing the trajectory.  Step k
 * draws its uniform from the stateless PRF keyed by (stream, k), so the
 * visited path is a pure function of (view.spec, view.origin_offset,
 * stream) — identical to what simulate_walk records.
 */
template <class Fn>
inline void walk_observe(const EnvironmentView& view, int n, std::uint64_t stream, Fn&& fn)
{
    if (n < 0) throw std::invalid_argument("walk_observe: n must be >= 0");
    detail::PartitionCache cache(view);
    Vec x = zero_vec(view.lambda.dims);
    fn(0, x);
    for (int k = 0; k < n; ++k) {
        double u = prf::uniform(stream, prf::tag_walk_step, static_cast<std::uint64_t>(k));
        const FiberPartition& part = cache.at(x);
        x = x + view.lambda[locate(u, part)];
        fn(k + 1, x);
    }
}

/**
 * Iterates the quenched chain for n steps from the origin.  Step k draws
 * its uniform from the stateless PRF keyed by (stream, k), so the result
 * is a pure function of (view.spec, view.origin_offset, stream).
 */
inline Trajectory simulate_walk(const EnvironmentView& view, int n, std::uint64_t stream)
{
    Trajectory traj;
    traj.env_seed = view.spec->seed;
    traj.walk_stream = stream;
    traj.positions.reserve(static_cast<std::size_t>(n) + 1);
    walk_observe(view, n, stream, [&](int, const Vec& x) { traj.positions.push_back(x); });
    return traj;
}

namespace detail {

template <class Fn>
inline void parallel_for_index(int n, int workers, Fn&& fn)
{
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    workers = std::min(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace detail

/// Seed of the environment used by annealed walk j.
inline std::uint64_t annealed_env_seed(const EnvironmentSpec& family, int j)
{
    return prf::key(family.seed, prf::tag_annealed_env, static_cast<std::uint64_t>(j));
}

/// Stream feeding the uniforms of walk j.
inline std::uint64_t walk_stream_seed(const EnvironmentSpec& family, EnsembleMode mode, int j)
{
    return mode == EnsembleMode::Annealed
               ? prf::key(family.seed, prf::tag_annealed_wlk, static_cast<std::uint64_t>(j))
               : prf::key(family.seed, prf::tag_quenched_wlk, static_cast<std::uint64_t>(j));
}

/**
 * Ensemble of independent walks.  Annealed mode gives walk j a fresh
 * environment seeded from (family.seed, j); quenched mode shares one
 * environment across walks.  Trajectories land at their walk index, so
 * the result does not depend on the worker count.
 */
inline WalkEnsemble sample_ensemble(const EnvironmentSpec& family, EnsembleMode mode,
                                    int n_walks, int n_steps, int workers = 1)
{
    if (n_walks < 1) throw std::invalid_argument("sample_ensemble: n_walks must be >= 1");
    WalkEnsemble ens;
    ens.mode = mode;
    ens.n_steps = n_steps;
    ens.spec = family;
    ens.trajectories.resize(static_cast<std::size_t>(n_walks));

    detail::parallel_for_index(n_walks, workers, [&](int j) {
        EnvironmentSpec spec_j = family;
        if (mode == EnsembleMode::Annealed) spec_j.seed = annealed_env_seed(family, j);
        EnvironmentView view = make_view(spec_j);
        ens.trajectories[static_cast<std::size_t>(j)] =
            simulate_walk(view, n_steps, walk_stream_seed(family, mode, j));
    });
    return ens;
}

inline WalkEnsemble annealed_sample(const EnvironmentSpec& family, int n_walks, int n_steps,
                                    int workers = 1)
{
    return sample_ensemble(family, EnsembleMode::Annealed, n_walks, n_steps, workers);
}

inline WalkEnsemble quenched_sample(const EnvironmentSpec& family, int n_walks, int n_steps,
                                    int workers = 1)
{
    return sample_ensemble(family, EnsembleMode::Quenched, n_walks, n_steps, workers);
}

/// Rebuilds the environment view a trajectory ran in.
inline EnvironmentView view_for(const WalkEnsemble& ens, const Trajectory& traj)
{
    EnvironmentSpec spec = ens.spec;
    spec.seed = traj.env_seed;
    return make_view(spec);
}

struct EquivalenceReport {
    long n_cylinders = 0;
    double max_discrepancy = 0.0;
    double total_measure = 0.0;
};

/**
 * Enumerates every multi-index of length n and compares the skew-product
 * cylinder measure against the product of quenched Markov transition
 * probabilities along the encoded path.  The two are computed through
 * different code paths (shifted views vs absolute-site kernels), so a
 * vanishing discrepancy certifies the representation equivalence.
 */
inline EquivalenceReport equivalence_check(const EnvironmentView& view, int n)
{
    const int N = view.lambda.size();
    double count = std::pow(static_cast<double>(N), n);
    if (!(count <= 1e6)) throw std::invalid_argument("equivalence_check: N^n exceeds 10^6");

    EquivalenceReport rep;
    detail::PartitionCache cache(view);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
        double cyl = cylinder_measure(view, CylinderIndex{idx});
        double markov = 1.0;
        Vec x = zero_vec(view.lambda.dims);
        for (int i : idx) {
            markov *= kernel_at(view, x)[static_cast<std::size_t>(i)];
            x = x + view.lambda[i];
        }
        rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(cyl - markov));
        rep.total_measure += cyl;
        ++rep.n_cylinders;

        int k = n - 1;
        for (; k >= 0; --k) {
            if (++idx[static_cast<std::size_t>(k)] < N) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
        if (k < 0) break;
    }
    return rep;
}

} // namespace rwre

#endif // RWRE_WALKER_HPP
