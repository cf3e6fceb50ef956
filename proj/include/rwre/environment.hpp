#ifndef RWRE_ENVIRONMENT_HPP
#define RWRE_ENVIRONMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwre/bistochastic.hpp"
#include "rwre/lattice.hpp"
#include "rwre/prf.hpp"

namespace rwre {

enum class EnvKind { SimpleSymmetric, IidAppendix, ExplicitPeriodic };
enum class SamplerKind { Sinkhorn, Birkhoff };

struct SamplerParams {
    double tol = 1e-12;
    int max_iter = 10000;
    int num_perms = 0; // birkhoff: 0 means all n0! permutations
};

/**
 * Full description of a random environment.  A spec determines the
 * environment completely: every kernel everywhere is a pure function of
 * (spec, site), so two views built from equal specs agree bit-exactly.
 */
struct EnvironmentSpec {
    EnvKind kind = EnvKind::SimpleSymmetric;
    std::uint64_t seed = 0;
    int dims = 1;
    SamplerKind sampler = SamplerKind::Sinkhorn;
    SamplerParams sampler_params;
    JumpSet lambda0; // iid-appendix base set

    // explicit-periodic: kernels on a fundamental domain, tiled periodically
    std::vector<std::int64_t> period;
    JumpSet table_lambda;
    std::vector<std::vector<double>> kernels; // row-major over the domain
};

/// Canonical base set for given (dims, n0): 0 and the first n0-1 positive
/// lattice vectors in lexicographically sorted shell order.
inline JumpSet default_lambda0(int dims, int n0)
{
    JumpSet js;
    js.dims = dims;
    js.displacements.push_back(zero_vec(dims));
    std::set<Vec> chosen;
    for (int radius = 1; static_cast<int>(js.displacements.size()) < n0 && radius < 8; ++radius) {
        std::vector<Vec> shell;
        // enumerate {0..radius}^d with max coordinate == radius
        std::vector<std::int64_t> idx(static_cast<std::size_t>(dims), 0);
        while (true) {
            std::int64_t mx = 0;
            Vec v(dims);
            for (int i = 0; i < dims; ++i) {
                v[i] = idx[static_cast<std::size_t>(i)];
                mx = std::max(mx, v[i]);
            }
            if (mx == radius) shell.push_back(v);
            int i = 0;
            for (; i < dims; ++i) {
                if (++idx[static_cast<std::size_t>(i)] <= radius) break;
                idx[static_cast<std::size_t>(i)] = 0;
            }
            if (i == dims) break;
        }
        std::sort(shell.begin(), shell.end());
        for (const Vec& v : shell) {
            if (static_cast<int>(js.displacements.size()) >= n0) break;
            js.displacements.push_back(v);
        }
    }
    if (static_cast<int>(js.displacements.size()) != n0)
        throw std::invalid_argument("default_lambda0: cannot build base set");
    js.validate();
    return js;
}

/// Difference set Lambda_0 - Lambda_0, lexicographically sorted.
/// Always contains 0 and is closed under negation.
inline JumpSet difference_set(const JumpSet& lambda0)
{
    std::set<Vec> s;
    for (const Vec& a : lambda0.displacements)
        for (const Vec& b : lambda0.displacements) s.insert(a - b);
    JumpSet js;
    js.dims = lambda0.dims;
    js.displacements.assign(s.begin(), s.end());
    return js;
}

namespace detail {

// Per-site variate stream keyed by (seed, site); draw k is stateless.
struct SiteStream {
    std::uint64_t base;
    SiteStream(std::uint64_t seed, const Vec& site)
    {
        std::uint64_t h = prf::mix64(seed ^ prf::tag_env_site);
        h = prf::combine(h, static_cast<std::uint64_t>(site.dims));
        for (int i = 0; i < site.dims; ++i)
            h = prf::combine(h, static_cast<std::uint64_t>(site[i]));
        base = h;
    }
    double uniform(std::uint64_t k) const
    {
        return prf::to_unit(prf::mix64(prf::combine(base, k)));
    }
};

} // namespace detail

/**
 * The realized local matrix omega^(site): a bistochastic n0 x n0 matrix,
 * an i.i.d. draw per site, deterministic in (spec.seed, site).
 */
inline LocalMatrix sample_local_matrix(const EnvironmentSpec& spec, const Vec& site)
{
    if (spec.kind != EnvKind::IidAppendix)
        throw std::invalid_argument("sample_local_matrix: spec.kind must be iid-appendix");
    check_addressable(site);
    const int n0 = spec.lambda0.size();
    detail::SiteStream stream(spec.seed, site);

    if (spec.sampler == SamplerKind::Sinkhorn) {
        std::vector<double> raw(static_cast<std::size_t>(n0) * static_cast<std::size_t>(n0));
        for (std::size_t k = 0; k < raw.size(); ++k)
            raw[k] = 0.1 + 0.9 * stream.uniform(k);
        return sinkhorn_normalize(std::move(raw), spec.lambda0.displacements,
                                  spec.sampler_params.tol, spec.sampler_params.max_iter);
    }

    // Birkhoff: positive pseudorandom weights over an explicit permutation
    // list (0 selects all n0! permutations).  The list is ordered with the
    // n0 cyclic shifts first so that any prefix of length >= n0 covers every
    // matrix entry, keeping all kernel entries strictly positive.
    std::vector<Permutation> lex = all_permutations(n0);
    std::vector<Permutation> perms;
    for (int k = 0; k < n0; ++k) {
        Permutation cyc(static_cast<std::size_t>(n0));
        for (int r = 0; r < n0; ++r) cyc[static_cast<std::size_t>(r)] = (r + k) % n0;
        perms.push_back(std::move(cyc));
    }
    for (const Permutation& p : lex)
        if (std::find(perms.begin(), perms.begin() + n0, p) == perms.begin() + n0)
            perms.push_back(p);
    if (spec.sampler_params.num_perms > 0) {
        if (spec.sampler_params.num_perms > static_cast<int>(perms.size()))
            throw std::invalid_argument("sample_local_matrix: num_perms exceeds n0!");
        if (spec.sampler_params.num_perms < n0)
            throw std::invalid_argument(
                "sample_local_matrix: num_perms below n0 cannot cover every entry");
        perms.resize(static_cast<std::size_t>(spec.sampler_params.num_perms));
    }
    std::vector<double> w(perms.size());
    double total = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = 0.1 + 0.9 * stream.uniform(k);
        total += w[k];
    }
    for (double& x : w) x /= total;
    return birkhoff_combine(w, perms, spec.lambda0.displacements, /*require_coverage=*/true);
}

/**
 * The interval-averaged kernel of the appendix construction, in the
 * relative-displacement reading: p(x, x+e) = (o(x,x+e) + o(x,x-e)) / 2
 * with o(x,y) = (1/N0) sum_zeta M(zeta)[x+zeta, y+zeta].
 *
 * The result is row-normalized, shift-equivariant and Lawler-balanced
 * (hence zero local drift), but its column sums deviate from 1 by O(1);
 * it is kept as the literal realization of the averaging formula and as
 * an oracle target.  kernel_at uses the exactly bistochastic generator
 * below instead.
 */
inline std::vector<double> averaged_kernel(
    const JumpSet& lambda0, const std::function<LocalMatrix(const Vec&)>& matrix_at,
    const Vec& site, const JumpSet& lambda_out)
{
    const int n0 = lambda0.size();
    auto o_entry = [&](const Vec& e) {
        // o(site, site+e): the local matrix at z contributes its entry for
        // displacements (site-z, site+e-z), so z ranges over
        // {site - u : u in Lambda_0, u + e in Lambda_0}.
        double s = 0.0;
        for (int iu = 0; iu < n0; ++iu) {
            const Vec& u = lambda0[iu];
            int iv = lambda0.index_of(u + e);
            if (iv < 0) continue;
            LocalMatrix m = matrix_at(site - u);
            s += m.at(iu, iv);
        }
        return s / static_cast<double>(n0);
    };
    std::vector<double> q(static_cast<std::size_t>(lambda_out.size()));
    for (int i = 0; i < lambda_out.size(); ++i) {
        const Vec& e = lambda_out[i];
        q[static_cast<std::size_t>(i)] = 0.5 * (o_entry(e) + o_entry(-e));
    }
    return q;
}

/**
 * A view of an environment: the spec plus the accumulated shift tau_z.
 * Immutable value; all queries are pure functions of (spec, offset, site).
 */
struct EnvironmentView {
    std::shared_ptr<const EnvironmentSpec> spec;
    Vec origin_offset;
    JumpSet lambda; // effective displacement set, fixed enumeration

    // iid-appendix precomputation
    std::vector<Vec> directions;   // positive half of lambda \ {0}
    double base_weight = 0.0;      // c
    double pair_amplitude = 0.0;   // a (0 when fewer than two directions)
};

namespace detail {

inline std::vector<double> iid_kernel(const EnvironmentView& view, const Vec& site);

} // namespace detail

inline EnvironmentView make_view(std::shared_ptr<const EnvironmentSpec> spec)
{
    EnvironmentView v;
    v.spec = std::move(spec);
    const EnvironmentSpec& s = *v.spec;
    v.origin_offset = zero_vec(s.dims);

    switch (s.kind) {
    case EnvKind::SimpleSymmetric: {
        std::vector<Vec> ds;
        for (int i = 0; i < s.dims; ++i) {
            ds.push_back(unit_vec(s.dims, i));
            ds.push_back(-unit_vec(s.dims, i));
        }
        std::sort(ds.begin(), ds.end());
        v.lambda = JumpSet{s.dims, std::move(ds)};
        break;
    }
    case EnvKind::IidAppendix: {
        if (s.lambda0.dims != s.dims)
            throw std::invalid_argument("make_view: lambda0 dims mismatch");
        s.lambda0.validate();
        v.lambda = difference_set(s.lambda0);
        for (const Vec& d : v.lambda.displacements)
            if (zero_vec(s.dims) < d) v.directions.push_back(d);
        const int m = static_cast<int>(v.directions.size());
        if (m >= 2) {
            v.base_weight = 1.0 / (2.0 * (m + 1));
            v.pair_amplitude = 1.0 / (8.0 * m * (m - 1) * (m + 1));
        } else {
            // single direction: the only exactly bistochastic balanced
            // kernel is site-independent; make it a function of the seed
            double u = prf::uniform(s.seed, prf::tag_env_const);
            v.base_weight = 0.25 + (u - 0.5) / 8.0;
            v.pair_amplitude = 0.0;
        }
        break;
    }
    case EnvKind::ExplicitPeriodic: {
        if (static_cast<int>(s.period.size()) != s.dims)
            throw std::invalid_argument("make_view: period dims mismatch");
        std::size_t cells = 1;
        for (std::int64_t p : s.period) {
            if (p < 1) throw std::invalid_argument("make_view: period entries must be >= 1");
            cells *= static_cast<std::size_t>(p);
        }
        s.table_lambda.validate();
        if (s.table_lambda.dims != s.dims)
            throw std::invalid_argument("make_view: table lambda dims mismatch");
        if (s.kernels.size() != cells)
            throw std::invalid_argument("make_view: kernel table size mismatch");
        for (const auto& row : s.kernels) {
            if (static_cast<int>(row.size()) != s.table_lambda.size())
                throw std::invalid_argument("make_view: kernel row size mismatch");
            double total = 0.0;
            for (double q : row) {
                if (q < 0.0) throw std::invalid_argument("make_view: negative kernel entry");
                total += q;
            }
            if (std::abs(total - 1.0) > kEpsBisto)
                throw std::invalid_argument("make_view: kernel row does not sum to 1");
        }
        v.lambda = s.table_lambda;
        break;
    }
    }
    return v;
}

inline EnvironmentView make_view(const EnvironmentSpec& spec)
{
    return make_view(std::make_shared<const EnvironmentSpec>(spec));
}

/// The group action tau_z: returns a view with the origin moved by z.
inline EnvironmentView shift(const EnvironmentView& view, const Vec& z)
{
    EnvironmentView v = view;
    v.origin_offset = view.origin_offset + z;
    check_addressable(v.origin_offset);
    return v;
}

/**
 * kernel_at(view, x)[i] = p_{x, x+d_i} for d_i in view.lambda.
 * Exactly shift-equivariant: kernel_at(shift(v,z), x) == kernel_at(v, x+z)
 * bit for bit, because everything is keyed by the absolute site.
 */
inline std::vector<double> kernel_at(const EnvironmentView& view, const Vec& x)
{
    const Vec site = view.origin_offset + x;
    check_addressable(site);
    const EnvironmentSpec& s = *view.spec;

    switch (s.kind) {
    case EnvKind::SimpleSymmetric:
        return std::vector<double>(static_cast<std::size_t>(view.lambda.size()),
                                   1.0 / (2.0 * s.dims));
    case EnvKind::IidAppendix:
        return detail::iid_kernel(view, site);
    case EnvKind::ExplicitPeriodic: {
        std::size_t idx = 0;
        for (int i = 0; i < s.dims; ++i) {
            std::int64_t p = s.period[static_cast<std::size_t>(i)];
            std::int64_t r = ((site[i] % p) + p) % p;
            idx = idx * static_cast<std::size_t>(p) + static_cast<std::size_t>(r);
        }
        return s.kernels[idx];
    }
    }
    throw std::logic_error("kernel_at: unreachable");
}

namespace detail {

/**
 * Exactly bistochastic, balanced, shift-equivariant kernel driven by the
 * i.i.d. local matrices.
 *
 * For directions e_1..e_m (the positive half of the difference set) the
 * weight of +-e_j at site x is
 *
 *   g_j(x) = c + sum_{k != j} sgn(j,k) * a * (psi_t(x-e_k) + psi_t(x+e_k)
 *                                             - 2 psi_t(x)),
 *
 * where psi_t is a per-site scalar read off the local matrix omega^(x) and
 * t indexes the unordered pair {j,k}.  The antisymmetric pairing of
 * commuting second differences makes sum_j D_{e_j} g_j vanish identically,
 * which is precisely the column-sum (bistochasticity) condition for a
 * balanced kernel; g_j used for both +e_j and -e_j gives zero local drift
 * that is exact in floating point.  The amplitude keeps every entry
 * strictly positive.
 */
inline std::vector<double> iid_kernel(const EnvironmentView& view, const Vec& site)
{
    const EnvironmentSpec& s = *view.spec;
    const int m = static_cast<int>(view.directions.size());
    const int n0 = s.lambda0.size();
    const std::size_t n0sq = static_cast<std::size_t>(n0) * static_cast<std::size_t>(n0);

    std::vector<double> g(static_cast<std::size_t>(m), view.base_weight);
    if (m >= 2) {
        // psi values: matrix entries at site and its direction neighbors
        auto psi = [&](int pair_index, const Vec& z) {
            LocalMatrix mat = sample_local_matrix(s, z);
            return mat.entries[static_cast<std::size_t>(pair_index) % n0sq];
        };
        int t = 0;
        for (int j = 0; j < m; ++j) {
            for (int k = j + 1; k < m; ++k, ++t) {
                const Vec& ej = view.directions[static_cast<std::size_t>(j)];
                const Vec& ek = view.directions[static_cast<std::size_t>(k)];
                double lap_k = psi(t, site - ek) + psi(t, site + ek) - 2.0 * psi(t, site);
                double lap_j = psi(t, site - ej) + psi(t, site + ej) - 2.0 * psi(t, site);
                g[static_cast<std::size_t>(j)] += view.pair_amplitude * lap_k;
                g[static_cast<std::size_t>(k)] -= view.pair_amplitude * lap_j;
            }
        }
    }

    double hold = 1.0;
    for (double gj : g) hold -= 2.0 * gj;

    std::vector<double> q(static_cast<std::size_t>(view.lambda.size()), 0.0);
    for (int i = 0; i < view.lambda.size(); ++i) {
        const Vec& d = view.lambda[i];
        if (d.is_zero()) {
            q[static_cast<std::size_t>(i)] = hold;
            continue;
        }
        for (int j = 0; j < m; ++j) {
            const Vec& ej = view.directions[static_cast<std::size_t>(j)];
            if (d == ej || d == -ej) {
                q[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(j)];
                break;
            }
        }
    }
    return q;
}

} // namespace detail

struct SiteValidation {
    Vec site;
    double row_dev = 0.0;
    double col_dev = 0.0;
    double drift_max = 0.0;
    double min_entry = 0.0;
};

struct ValidationReport {
    std::vector<SiteValidation> sites;
    double eps_bisto = kEpsBisto;
    double eps_drift = kEpsDrift;
    double max_row_dev = 0.0;
    double max_col_dev = 0.0;
    double max_drift = 0.0;
    double min_entry = 1.0;
    bool pass = false;
};

/**
 * Checks normalization, bistochasticity (via the incoming kernel computed
 * from shifted views), local drift and positivity at the given sites.
 * Failures are report content, never exceptions.
 */
inline ValidationReport validate_environment(const EnvironmentView& view,
                                             const std::vector<Vec>& sites,
                                             double eps_bisto = kEpsBisto,
                                             double eps_drift = kEpsDrift)
{
    if (sites.empty())
        throw std::invalid_argument("validate_environment: sites must be nonempty");
    ValidationReport rep;
    rep.eps_bisto = eps_bisto;
    rep.eps_drift = eps_drift;
    const int n = view.lambda.size();
    const int d = view.lambda.dims;
    for (const Vec& x : sites) {
        SiteValidation sv;
        sv.site = x;
        std::vector<double> q = kernel_at(view, x);

        double row = 0.0;
        sv.min_entry = q.empty() ? 0.0 : q[0];
        std::vector<double> drift(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < n; ++i) {
            row += q[static_cast<std::size_t>(i)];
            sv.min_entry = std::min(sv.min_entry, q[static_cast<std::size_t>(i)]);
            for (int a = 0; a < d; ++a)
                drift[static_cast<std::size_t>(a)] +=
                    q[static_cast<std::size_t>(i)] * static_cast<double>(view.lambda[i][a]);
        }
        sv.row_dev = std::abs(row - 1.0);
        for (int a = 0; a < d; ++a)
            sv.drift_max = std::max(sv.drift_max, std::abs(drift[static_cast<std::size_t>(a)]));

        // incoming mass: q'_i = q_i(tau_{-d_i} omega) = p_{x - d_i, x}
        double col = 0.0;
        for (int i = 0; i < n; ++i) {
            EnvironmentView shifted = shift(view, -view.lambda[i]);
            col += kernel_at(shifted, x)[static_cast<std::size_t>(i)];
        }
        sv.col_dev = std::abs(col - 1.0);

        rep.max_row_dev = std::max(rep.max_row_dev, sv.row_dev);
        rep.max_col_dev = std::max(rep.max_col_dev, sv.col_dev);
        rep.max_drift = std::max(rep.max_drift, sv.drift_max);
        rep.min_entry = std::min(rep.min_entry, sv.min_entry);
        rep.sites.push_back(sv);
    }
    rep.pass = rep.max_row_dev <= eps_bisto && rep.max_col_dev <= eps_bisto &&
               rep.max_drift <= eps_drift;
    return rep;
}

} // namespace rwre

#endif // RWRE_ENVIRONMENT_HPP
