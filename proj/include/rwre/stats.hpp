#ifndef RWRE_STATS_HPP
#define RWRE_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/lattice.hpp"
#include "rwre/walker.hpp"

namespace rwre {

// 0.999 quantile of the Kolmogorov law; see README for the reference value.
inline constexpr double kKolmogorov999 = 1.95;

inline constexpr double kDegenerateVariance = 1e-8;

/// Standard normal CDF (via erfc; well below 1e-7 absolute error).
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// sup_x |F_emp(x) - F(x)| for a sorted sample against a continuous CDF.
template <class Cdf>
inline double ks_statistic(std::vector<double> sample, Cdf&& cdf)
{
    if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf(sample[i]);
        d = std::max(d, std::max((static_cast<double>(i) + 1.0) / n - f,
                                 f - static_cast<double>(i) / n));
    }
    return d;
}

/// Symmetric d x d covariance estimate with per-entry standard errors.
struct CovarianceEstimate {
    int dims = 0;
    std::vector<double> matrix;          // row-major d x d
    std::vector<double> standard_errors; // row-major d x d
    std::vector<double> mean;            // of X_n / sqrt(n); empirical only
    long n_samples = 0;

    double at(int a, int b) const
    {
        return matrix[static_cast<std::size_t>(a) * static_cast<std::size_t>(dims) +
                      static_cast<std::size_t>(b)];
    }
    double se(int a, int b) const
    {
        return standard_errors[static_cast<std::size_t>(a) * static_cast<std::size_t>(dims) +
                               static_cast<std::size_t>(b)];
    }
};

namespace detail {

// mean and standard error of the mean, in one pass
inline std::pair<double, double> mean_se(const std::vector<double>& xs)
{
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

} // namespace detail

/**
 * Monte Carlo estimate of the step-covariance integral: the environment
 * average of sum_i q_i d_i^a d_i^b at the origin.  The s-integral is exact
 * per environment because the displacement is piecewise constant in s.
 * For an explicit-periodic spec the average runs over the fundamental
 * domain (the exact environment law); simple-symmetric needs one sample.
 */
inline CovarianceEstimate theoretical_covariance(const EnvironmentSpec& spec, int n_env_samples)
{
    if (n_env_samples < 1)
        throw std::invalid_argument("theoretical_covariance: n_env_samples must be >= 1");
    const int d = spec.dims;

    std::vector<Vec> probe_sites;
    std::vector<EnvironmentSpec> specs;
    if (spec.kind == EnvKind::IidAppendix) {
        for (int j = 0; j < n_env_samples; ++j) {
            EnvironmentSpec s = spec;
            s.seed = prf::key(spec.seed, prf::tag_cov_env, static_cast<std::uint64_t>(j));
            specs.push_back(s);
            probe_sites.push_back(zero_vec(d));
        }
    } else if (spec.kind == EnvKind::ExplicitPeriodic) {
        // exact: every translate of the fundamental domain once
        std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
        while (true) {
            Vec site(d);
            for (int i = 0; i < d; ++i) site[i] = idx[static_cast<std::size_t>(i)];
            specs.push_back(spec);
            probe_sites.push_back(site);
            int i = 0;
            for (; i < d; ++i) {
                if (++idx[static_cast<std::size_t>(i)] < spec.period[static_cast<std::size_t>(i)])
                    break;
                idx[static_cast<std::size_t>(i)] = 0;
            }
            if (i == d) break;
        }
    } else {
        specs.push_back(spec);
        probe_sites.push_back(zero_vec(d));
    }

    std::vector<std::vector<double>> samples(static_cast<std::size_t>(d) *
                                             static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < specs.size(); ++j) {
        EnvironmentView view = make_view(specs[j]);
        std::vector<double> q = kernel_at(view, probe_sites[j]);
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                double c = 0.0;
                for (int i = 0; i < view.lambda.size(); ++i)
                    c += q[static_cast<std::size_t>(i)] *
                         static_cast<double>(view.lambda[i][a]) *
                         static_cast<double>(view.lambda[i][b]);
                samples[static_cast<std::size_t>(a) * static_cast<std::size_t>(d) +
                        static_cast<std::size_t>(b)]
                    .push_back(c);
            }
        }
    }

    CovarianceEstimate est;
    est.dims = d;
    est.n_samples = static_cast<long>(specs.size());
    est.matrix.resize(samples.size());
    est.standard_errors.resize(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        auto [m, se] = detail::mean_se(samples[k]);
        est.matrix[k] = m;
        est.standard_errors[k] = se;
    }
    // enforce exact symmetry
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            std::size_t ab = static_cast<std::size_t>(a) * static_cast<std::size_t>(d) +
                             static_cast<std::size_t>(b);
            std::size_t ba = static_cast<std::size_t>(b) * static_cast<std::size_t>(d) +
                             static_cast<std::size_t>(a);
            est.matrix[ba] = est.matrix[ab];
            est.standard_errors[ba] = est.standard_errors[ab];
        }
    }
    return est;
}

/**
 * Sample covariance of X_n / sqrt(n) over the ensemble.  The mean is not
 * subtracted in the main estimator (the walk is a zero-mean martingale);
 * it is reported separately in `mean`.
 */
inline CovarianceEstimate empirical_covariance(const WalkEnsemble& ens)
{
    if (ens.trajectories.empty())
        throw std::invalid_argument("empirical_covariance: empty ensemble");
    if (ens.n_steps < 1)
        throw std::invalid_argument("empirical_covariance: need n_steps >= 1");
    const int d = ens.spec.dims;
    const double n = static_cast<double>(ens.n_steps);

    std::vector<std::vector<double>> products(static_cast<std::size_t>(d) *
                                              static_cast<std::size_t>(d));
    std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
    for (const Trajectory& t : ens.trajectories) {
        const Vec& x = t.positions.back();
        for (int a = 0; a < d; ++a) {
            mean[static_cast<std::size_t>(a)] += static_cast<double>(x[a]) / std::sqrt(n);
            for (int b = 0; b < d; ++b)
                products[static_cast<std::size_t>(a) * static_cast<std::size_t>(d) +
                         static_cast<std::size_t>(b)]
                    .push_back(static_cast<double>(x[a]) * static_cast<double>(x[b]) / n);
        }
    }

    CovarianceEstimate est;
    est.dims = d;
    est.n_samples = static_cast<long>(ens.trajectories.size());
    est.matrix.resize(products.size());
    est.standard_errors.resize(products.size());
    for (std::size_t k = 0; k < products.size(); ++k) {
        auto [m, se] = detail::mean_se(products[k]);
        est.matrix[k] = m;
        est.standard_errors[k] = se;
    }
    for (double& m : mean) m /= static_cast<double>(ens.trajectories.size());
    est.mean = std::move(mean);
    return est;
}

/// Largest entrywise discrepancy between two estimates, in units of the
/// combined standard error (entries with zero combined SE compare exactly).
inline double covariance_max_sigma(const CovarianceEstimate& a, const CovarianceEstimate& b)
{
    if (a.dims != b.dims) throw std::invalid_argument("covariance_max_sigma: dims mismatch");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.matrix.size(); ++k) {
        double se = std::sqrt(a.standard_errors[k] * a.standard_errors[k] +
                              b.standard_errors[k] * b.standard_errors[k]);
        double diff = std::abs(a.matrix[k] - b.matrix[k]);
        if (se == 0.0) {
            if (diff > 0.0) return std::numeric_limits<double>::infinity();
            continue;
        }
        worst = std::max(worst, diff / se);
    }
    return worst;
}

struct CltCoordinateResult {
    int coordinate = 0;
    bool degenerate = false;
    double ks = 0.0;
    double scaled = 0.0; // sqrt(n_walks) * ks
    bool pass = false;
};

struct CltReport {
    std::vector<CltCoordinateResult> coordinates;
    double threshold = kKolmogorov999;
    bool pass = false;
    bool any_degenerate = false;
};

/**
 * Per-coordinate Kolmogorov-Smirnov comparison of the empirical law of
 * X_n^(a) / sqrt(n c_aa) against the standard normal.  Coordinates with
 * c_aa below the degeneracy floor are skipped and flagged.
 */
inline CltReport clt_distribution_test(const WalkEnsemble& ens, const CovarianceEstimate& C,
                                       double threshold = kKolmogorov999)
{
    if (ens.trajectories.empty())
        throw std::invalid_argument("clt_distribution_test: empty ensemble");
    const int d = ens.spec.dims;
    if (C.dims != d) throw std::invalid_argument("clt_distribution_test: dims mismatch");
    const double n = static_cast<double>(ens.n_steps);
    const double root_walks = std::sqrt(static_cast<double>(ens.trajectories.size()));

    CltReport rep;
    rep.threshold = threshold;
    bool all_degenerate = true;
    bool ok = true;
    for (int a = 0; a < d; ++a) {
        CltCoordinateResult r;
        r.coordinate = a;
        double caa = C.at(a, a);
        if (caa < kDegenerateVariance) {
            r.degenerate = true;
            rep.any_degenerate = true;
            rep.coordinates.push_back(r);
            continue;
        }
        all_degenerate = false;
        std::vector<double> sample;
        sample.reserve(ens.trajectories.size());
        for (const Trajectory& t : ens.trajectories)
            sample.push_back(static_cast<double>(t.positions.back()[a]) / std::sqrt(n * caa));
        r.ks = ks_statistic(std::move(sample), normal_cdf);
        r.scaled = root_walks * r.ks;
        r.pass = r.scaled < threshold;
        ok = ok && r.pass;
        rep.coordinates.push_back(r);
    }
    if (all_degenerate)
        throw std::invalid_argument("clt_distribution_test: covariance fully degenerate");
    rep.pass = ok;
    return rep;
}

struct MartingaleAudit {
    double max_drift = 0.0;
    long sites_checked = 0;
    bool pass = false;
    double eps_drift = kEpsDrift;
};

/**
 * Deterministic replay of every trajectory, evaluating the conditional
 * one-step mean sum_i q_i d_i at each visited site.  For a valid
 * environment the maximum component magnitude never exceeds eps_drift.
 */
inline MartingaleAudit martingale_audit(const WalkEnsemble& ens, double eps_drift = kEpsDrift)
{
    MartingaleAudit audit;
    audit.eps_drift = eps_drift;
    const int d = ens.spec.dims;
    for (const Trajectory& traj : ens.trajectories) {
        EnvironmentView view = view_for(ens, traj);
        std::unordered_map<Vec, double, VecHash> seen;
        for (std::size_t k = 0; k + 1 < traj.positions.size(); ++k) {
            const Vec& x = traj.positions[k];
            auto it = seen.find(x);
            if (it == seen.end()) {
                std::vector<double> q = kernel_at(view, x);
                double worst = 0.0;
                for (int a = 0; a < d; ++a) {
                    double drift = 0.0;
                    for (int i = 0; i < view.lambda.size(); ++i)
                        drift += q[static_cast<std::size_t>(i)] *
                                 static_cast<double>(view.lambda[i][a]);
                    worst = std::max(worst, std::abs(drift));
                }
                seen.emplace(x, worst);
                ++audit.sites_checked;
                audit.max_drift = std::max(audit.max_drift, worst);
            }
        }
    }
    audit.pass = audit.max_drift <= eps_drift;
    return audit;
}

struct SchmidtRow {
    int n = 0;
    double rho = 0.0;
    double r_est = 0.0;  // fraction of walks with |X_n / n^{1/d}| < rho
    double ratio = 0.0;  // r_est / rho^d
    double stderr_ = 0.0;
};

struct SchmidtTable {
    std::vector<SchmidtRow> rows;
    double min_ratio = 0.0;
};

/**
 * Empirical estimate of the recurrence-criterion distribution bound: for
 * each (n, rho), the mass of X_n / n^{1/d} inside the Euclidean ball of
 * radius rho, its ratio to rho^d and a binomial standard error.
 */
inline SchmidtTable schmidt_criterion(const WalkEnsemble& ens, const std::vector<int>& n_list,
                                      const std::vector<double>& rho_list)
{
    if (n_list.empty() || rho_list.empty())
        throw std::invalid_argument("schmidt_criterion: empty n or rho list");
    if (ens.trajectories.empty())
        throw std::invalid_argument("schmidt_criterion: empty ensemble");
    const int d = ens.spec.dims;
    const double walks = static_cast<double>(ens.trajectories.size());

    SchmidtTable table;
    table.min_ratio = std::numeric_limits<double>::infinity();
    for (int n : n_list) {
        if (n < 1 || n > ens.n_steps)
            throw std::invalid_argument("schmidt_criterion: n outside ensemble range");
        double scale = std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d));
        for (double rho : rho_list) {
            if (!(rho > 0.0)) throw std::invalid_argument("schmidt_criterion: rho must be > 0");
            long hits = 0;
            for (const Trajectory& t : ens.trajectories) {
                const Vec& x = t.positions[static_cast<std::size_t>(n)];
                double norm2 = 0.0;
                for (int a = 0; a < d; ++a)
                    norm2 += static_cast<double>(x[a]) * static_cast<double>(x[a]);
                if (std::sqrt(norm2) / scale < rho) ++hits;
            }
            SchmidtRow row;
            row.n = n;
            row.rho = rho;
            row.r_est = static_cast<double>(hits) / walks;
            row.ratio = row.r_est / std::pow(rho, d);
            row.stderr_ = std::sqrt(row.r_est * (1.0 - row.r_est) / walks);
            table.min_ratio = std::min(table.min_ratio, row.ratio);
            table.rows.push_back(row);
        }
    }
    return table;
}

struct RecurrenceReport {
    std::map<int, long> first_return_histogram; // first k >= 1 with X_k = 0
    std::vector<double> return_fraction_by_step; // index n: fraction returned by n
    long n_walks = 0;

    double fraction_at(int n) const
    {
        if (n < 0 || n >= static_cast<int>(return_fraction_by_step.size()))
            throw std::out_of_range("RecurrenceReport: step out of range");
        return return_fraction_by_step[static_cast<std::size_t>(n)];
    }
};

/// First-return histogram and the (nondecreasing) cumulative fraction of
/// walks that have revisited the origin by step n.
inline RecurrenceReport recurrence_stats(const WalkEnsemble& ens)
{
    RecurrenceReport rep;
    rep.n_walks = static_cast<long>(ens.trajectories.size());
    std::vector<long> first_returns;
    for (const Trajectory& t : ens.trajectories) {
        for (std::size_t k = 1; k < t.positions.size(); ++k) {
            if (t.positions[k].is_zero()) {
                ++rep.first_return_histogram[static_cast<int>(k)];
                first_returns.push_back(static_cast<long>(k));
                break;
            }
        }
    }
    rep.return_fraction_by_step.assign(static_cast<std::size_t>(ens.n_steps) + 1, 0.0);
    long count = 0;
    auto it = rep.first_return_histogram.begin();
    for (int n = 1; n <= ens.n_steps; ++n) {
        while (it != rep.first_return_histogram.end() && it->first <= n) {
            count += it->second;
            ++it;
        }
        rep.return_fraction_by_step[static_cast<std::size_t>(n)] =
            rep.n_walks > 0 ? static_cast<double>(count) / static_cast<double>(rep.n_walks) : 0.0;
    }
    return rep;
}

} // namespace rwre

#endif // RWRE_STATS_HPP
