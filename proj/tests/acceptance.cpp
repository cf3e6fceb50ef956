// Acceptance suite: end-to-end checks of the environment invariants, the
// skew-product representation, and the statistical limit theorems, at the
// scales fixed in the project requirements.  Prints one pass/fail line per
// criterion and exits nonzero if any fails.
//
// Frozen oracle constants (computed beforehand with independent tooling):
//  - 2d uniform walk, fraction returned to the origin by step 10^4: 0.741
//    (direct simulation with an unrelated generator, 10^4 walks)
//  - 3d uniform walk, same quantity: 0.336 (transient control)
//  - Gaussian-limit ball mass for the 2d walk at scale sqrt(n):
//    P(|X_n|/sqrt(n) < rho) -> 1 - exp(-rho^2)
//  - iid-environment return fractions by step 10^4: ~0.99 (d=1, N_0=3),
//    ~0.77 (d=2, N_0=3); thresholds 0.8 / 0.6 leave 4-sigma margins
//  - 1d uniform walk, P(|X_10|/10 < rho): 252/1024 (rho=0.2),
//    672/1024 (rho=0.4), 1002/1024 (rho=0.8) from the binomial law

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rwre/dynamics.hpp"
#include "rwre/environment.hpp"
#include "rwre/runner.hpp"
#include "rwre/serialize.hpp"
#include "rwre/stats.hpp"
#include "rwre/walker.hpp"

using namespace rwre;

namespace {

int g_workers = 8;

EnvironmentSpec simple_spec(int dims, std::uint64_t seed = 1)
{
    EnvironmentSpec spec;
    spec.kind = EnvKind::SimpleSymmetric;
    spec.dims = dims;
    spec.seed = seed;
    return spec;
}

EnvironmentSpec iid_spec(int dims, int n0, std::uint64_t seed)
{
    EnvironmentSpec spec;
    spec.kind = EnvKind::IidAppendix;
    spec.dims = dims;
    spec.seed = seed;
    spec.lambda0 = default_lambda0(dims, n0);
    return spec;
}

// annealed ensemble folded walk by walk without materializing trajectories;
// per_walk(j, view, stream) runs on a worker thread
template <class PerWalk>
void annealed_stream(const EnvironmentSpec& family, int n_walks, PerWalk per_walk)
{
    detail::parallel_for_index(n_walks, g_workers, [&](int j) {
        EnvironmentSpec spec_j = family;
        spec_j.seed = annealed_env_seed(family, j);
        per_walk(j, make_view(spec_j), walk_stream_seed(family, EnsembleMode::Annealed, j));
    });
}

// final positions X_n of an annealed ensemble, streamed
std::vector<Vec> final_positions(const EnvironmentSpec& family, int n_walks, int n_steps)
{
    std::vector<Vec> xs(static_cast<std::size_t>(n_walks));
    annealed_stream(family, n_walks, [&](int j, const EnvironmentView& view, std::uint64_t st) {
        walk_observe(view, n_steps, st, [&](int k, const Vec& x) {
            if (k == n_steps) xs[static_cast<std::size_t>(j)] = x;
        });
    });
    return xs;
}

// first return step to the origin (0 if none within n_steps), streamed
std::vector<int> first_returns(const EnvironmentSpec& family, int n_walks, int n_steps)
{
    std::vector<int> ret(static_cast<std::size_t>(n_walks), 0);
    annealed_stream(family, n_walks, [&](int j, const EnvironmentView& view, std::uint64_t st) {
        int hit = 0;
        walk_observe(view, n_steps, st, [&](int k, const Vec& x) {
            if (hit == 0 && k >= 1 && x.is_zero()) hit = k;
        });
        ret[static_cast<std::size_t>(j)] = hit;
    });
    return ret;
}

double return_fraction(const std::vector<int>& first, int by_step)
{
    long hits = 0;
    for (int k : first)
        if (k >= 1 && k <= by_step) ++hits;
    return static_cast<double>(hits) / static_cast<double>(first.size());
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

// ---------------------------------------------------------------------------

Outcome criterion_environment_validity()
{
    Outcome out;
    double worst_dev = 0.0, worst_min = 1.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        for (int dims : {1, 2}) {
            for (int n0 : {2, 3, 4}) {
                EnvironmentSpec spec = iid_spec(dims, n0, seed * 1000 + static_cast<std::uint64_t>(10 * dims + n0));
                std::vector<Vec> sites = probe_sites(spec.seed, dims, 200);
                ValidationReport rep = validate_environment(make_view(spec), sites);
                worst_dev = std::max({worst_dev, rep.max_row_dev, rep.max_col_dev, rep.max_drift});
                worst_min = std::min(worst_min, rep.min_entry);
            }
        }
    }
    out.require(worst_dev <= 1e-10, "deviation " + fmt(worst_dev) + " > 1e-10");
    out.require(worst_min > 0.0, "nonpositive kernel entry");
    out.detail = "max deviation " + fmt(worst_dev) + ", min entry " + fmt(worst_min);
    return out;
}

Outcome criterion_measure_preservation()
{
    Outcome out;
    EnvironmentView view = make_view(iid_spec(2, 3, 42));

    // exact: preimage lengths of random intervals at random sites
    double worst = 0.0;
    std::vector<Vec> sites = probe_sites(7, 2, 100);
    for (int k = 0; k < 100; ++k) {
        double u1 = prf::uniform(11, prf::tag_validate, static_cast<std::uint64_t>(k), 0ULL);
        double u2 = prf::uniform(11, prf::tag_validate, static_cast<std::uint64_t>(k), 1ULL);
        double b = std::min(u1, u2), c = std::max(u1, u2);
        FiberPartition part =
            build_partition(kernel_at(view, sites[static_cast<std::size_t>(k)]));
        worst = std::max(worst, std::abs(preimage_length(part, b, c) - (c - b)));
    }
    out.require(worst <= 1e-12, "preimage length defect " + fmt(worst) + " > 1e-12");

    // statistical: uniform s stays uniform after one fiber-map application
    FiberPartition origin = build_partition(kernel_at(view, zero_vec(2)));
    std::vector<double> pushed;
    pushed.reserve(100000);
    for (int k = 0; k < 100000; ++k) {
        double s = prf::uniform(13, prf::tag_orbit, static_cast<std::uint64_t>(k));
        pushed.push_back(fiber_map_in(s, origin));
    }
    double ks = ks_statistic(std::move(pushed), [](double x) { return x; });
    double scaled = std::sqrt(100000.0) * ks;
    out.require(scaled < kKolmogorov999, "scaled KS " + fmt(scaled) + " >= 1.95");
    out.detail = "preimage defect " + fmt(worst) + ", scaled KS " + fmt(scaled);
    return out;
}

Outcome criterion_representation_equivalence()
{
    Outcome out;
    for (const EnvironmentSpec& spec :
         {simple_spec(2), iid_spec(1, 2, 2024)}) { // N = 4 and N = 3
        EquivalenceReport rep = equivalence_check(make_view(spec), 5);
        out.require(rep.max_discrepancy <= 1e-12,
                    "cylinder discrepancy " + fmt(rep.max_discrepancy));
        out.require(std::abs(rep.total_measure - 1.0) <= 1e-9,
                    "total measure " + fmt(rep.total_measure));
        out.detail += (out.detail.empty() ? "" : "; ") + std::to_string(rep.n_cylinders) +
                      " cylinders, discrepancy " + fmt(rep.max_discrepancy);
    }
    return out;
}

Outcome criterion_cylinder_decay()
{
    Outcome out;
    EnvironmentView view = make_view(iid_spec(1, 3, 99));
    const int orbits = 100, n = 10000;
    std::vector<double> rates(orbits);
    detail::parallel_for_index(orbits, g_workers, [&](int j) {
        double s = prf::uniform(view.spec->seed, prf::tag_orbit, 7777ULL,
                                static_cast<std::uint64_t>(j));
        rates[static_cast<std::size_t>(j)] = info_rate(make_state(s, view), n);
    });
    double lo = rates[0], hi = rates[0], mean = 0.0;
    for (double r : rates) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        mean += r;
    }
    mean /= orbits;
    double spread = (hi - lo) / mean;
    out.require(lo > 0.05, "info rate " + fmt(lo) + " <= 0.05");
    out.require(spread < 0.10, "relative spread " + fmt(spread) + " >= 10%");
    out.detail = "rate in [" + fmt(lo) + ", " + fmt(hi) + "], spread " + fmt(spread);
    return out;
}

Outcome criterion_annealed_clt()
{
    Outcome out;

    // (a) 2d uniform walk: covariance within 5% of diag(1/2, 1/2)
    {
        const int walks = 10000, n = 10000;
        std::vector<Vec> xs = final_positions(simple_spec(2, 5), walks, n);
        double c00 = 0, c11 = 0, c01 = 0;
        for (const Vec& x : xs) {
            c00 += static_cast<double>(x[0]) * static_cast<double>(x[0]);
            c11 += static_cast<double>(x[1]) * static_cast<double>(x[1]);
            c01 += static_cast<double>(x[0]) * static_cast<double>(x[1]);
        }
        c00 /= walks * static_cast<double>(n);
        c11 /= walks * static_cast<double>(n);
        c01 /= walks * static_cast<double>(n);
        out.require(std::abs(c00 - 0.5) <= 0.025, "c00 = " + fmt(c00));
        out.require(std::abs(c11 - 0.5) <= 0.025, "c11 = " + fmt(c11));
        out.require(std::abs(c01) <= 0.025, "c01 = " + fmt(c01));
        for (int a = 0; a < 2; ++a) {
            std::vector<double> z;
            z.reserve(xs.size());
            for (const Vec& x : xs)
                z.push_back(static_cast<double>(x[a]) / std::sqrt(0.5 * n));
            double scaled = std::sqrt(static_cast<double>(walks)) * ks_statistic(std::move(z), normal_cdf);
            out.require(scaled < kKolmogorov999,
                        "uniform-walk KS coord " + std::to_string(a) + " = " + fmt(scaled));
        }
        out.detail = "uniform c = (" + fmt(c00) + ", " + fmt(c11) + ", " + fmt(c01) + ")";
    }

    // (b) iid environment: empirical vs theoretical covariance, 4 combined
    // standard errors; per-coordinate distribution test
    {
        EnvironmentSpec family = iid_spec(2, 3, 314);
        const int walks = 4000, n = 1000;
        CovarianceEstimate theo = theoretical_covariance(family, 400);
        std::vector<Vec> xs = final_positions(family, walks, n);

        CovarianceEstimate emp;
        emp.dims = 2;
        emp.n_samples = walks;
        emp.matrix.assign(4, 0.0);
        emp.standard_errors.assign(4, 0.0);
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                std::vector<double> prod;
                prod.reserve(xs.size());
                for (const Vec& x : xs)
                    prod.push_back(static_cast<double>(x[a]) * static_cast<double>(x[b]) / n);
                auto [m, se] = detail::mean_se(prod);
                emp.matrix[static_cast<std::size_t>(2 * a + b)] = m;
                emp.standard_errors[static_cast<std::size_t>(2 * a + b)] = se;
            }
        }
        double sigma = covariance_max_sigma(theo, emp);
        out.require(sigma <= 4.0, "iid covariance discrepancy " + fmt(sigma) + " sigma");
        for (int a = 0; a < 2; ++a) {
            double caa = theo.at(a, a);
            std::vector<double> z;
            z.reserve(xs.size());
            for (const Vec& x : xs)
                z.push_back(static_cast<double>(x[a]) / std::sqrt(caa * n));
            double scaled = std::sqrt(static_cast<double>(walks)) * ks_statistic(std::move(z), normal_cdf);
            out.require(scaled < kKolmogorov999,
                        "iid KS coord " + std::to_string(a) + " = " + fmt(scaled));
        }
        out.detail += "; iid discrepancy " + fmt(sigma) + " sigma";
    }
    return out;
}

Outcome criterion_martingale_audit()
{
    Outcome out;
    WalkEnsemble ens = annealed_sample(iid_spec(2, 3, 2718), 1000, 1000, g_workers);
    MartingaleAudit audit = martingale_audit(ens);
    out.require(audit.max_drift <= 1e-10, "max drift " + fmt(audit.max_drift));
    out.detail = "max drift " + fmt(audit.max_drift) + " over " +
                 std::to_string(audit.sites_checked) + " sites";
    return out;
}

Outcome criterion_schmidt()
{
    Outcome out;
    const std::vector<int> n_list = {1024, 2048, 4096, 8192, 16384};
    const std::vector<double> rho_list = {0.2, 0.4, 0.8};
    const int walks = 4000;

    // stream the 2d uniform walk, keeping |X_n| at the dyadic steps only
    std::vector<std::vector<double>> norm(n_list.size(),
                                          std::vector<double>(static_cast<std::size_t>(walks)));
    annealed_stream(simple_spec(2, 9), walks,
                    [&](int j, const EnvironmentView& view, std::uint64_t st) {
                        walk_observe(view, n_list.back(), st, [&](int k, const Vec& x) {
                            for (std::size_t t = 0; t < n_list.size(); ++t) {
                                if (k == n_list[t]) {
                                    double nx = std::hypot(static_cast<double>(x[0]),
                                                           static_cast<double>(x[1]));
                                    norm[t][static_cast<std::size_t>(j)] = nx;
                                }
                            }
                        });
                    });

    double worst_ratio = 1e9, worst_sigma = 0.0;
    for (std::size_t t = 0; t < n_list.size(); ++t) {
        double scale = std::sqrt(static_cast<double>(n_list[t]));
        for (double rho : rho_list) {
            long hits = 0;
            for (double nx : norm[t])
                if (nx / scale < rho) ++hits;
            double r = static_cast<double>(hits) / walks;
            double ratio = r / (rho * rho);
            double gauss = 1.0 - std::exp(-rho * rho); // frozen Gaussian-limit oracle
            double se = std::sqrt(gauss * (1.0 - gauss) / walks);
            double z = std::abs(r - gauss) / se;
            worst_ratio = std::min(worst_ratio, ratio);
            worst_sigma = std::max(worst_sigma, z);
            out.require(ratio >= 0.05, "ratio " + fmt(ratio) + " at n=" + std::to_string(n_list[t]) +
                                           " rho=" + fmt(rho));
            out.require(z <= 4.0, "gaussian-oracle deviation " + fmt(z) + " sigma at n=" +
                                      std::to_string(n_list[t]) + " rho=" + fmt(rho));
        }
    }

    // exact small-n cross-check: all 1024 sign paths of the 1d uniform walk
    WalkEnsemble enumerated;
    enumerated.spec = simple_spec(1);
    enumerated.n_steps = 10;
    for (int bits = 0; bits < 1024; ++bits) {
        Trajectory traj;
        std::int64_t x = 0;
        traj.positions.push_back(Vec{0});
        for (int k = 0; k < 10; ++k) {
            x += ((bits >> k) & 1) ? 1 : -1;
            traj.positions.push_back(Vec{x});
        }
        enumerated.trajectories.push_back(std::move(traj));
    }
    SchmidtTable exact = schmidt_criterion(enumerated, {10}, rho_list);
    out.require(exact.rows[0].r_est == 252.0 / 1024.0, "exact rho=0.2 row");
    out.require(exact.rows[1].r_est == 672.0 / 1024.0, "exact rho=0.4 row");
    out.require(exact.rows[2].r_est == 1002.0 / 1024.0, "exact rho=0.8 row");

    out.detail = "min ratio " + fmt(worst_ratio) + ", worst oracle deviation " +
                 fmt(worst_sigma) + " sigma, exact 10-step table matches";
    return out;
}

Outcome criterion_recurrence()
{
    Outcome out;

    // exact: the four 2-step paths of the 1d uniform walk
    WalkEnsemble two_step;
    two_step.spec = simple_spec(1);
    two_step.n_steps = 2;
    for (auto path : {std::vector<std::int64_t>{0, 1, 2}, {0, 1, 0}, {0, -1, 0}, {0, -1, -2}}) {
        Trajectory t;
        for (std::int64_t x : path) t.positions.push_back(Vec{x});
        two_step.trajectories.push_back(std::move(t));
    }
    RecurrenceReport exact = recurrence_stats(two_step);
    out.require(exact.fraction_at(2) == 0.5, "exact 2-step fraction");

    // d=2 uniform walk vs the frozen independent-simulation oracle 0.741
    const int n = 10000;
    std::vector<int> d2 = first_returns(simple_spec(2, 21), 10000, n);
    double f2 = return_fraction(d2, n);
    double oracle = 0.741, se = std::sqrt(oracle * (1 - oracle) / 10000.0);
    out.require(f2 > oracle - 4.0 * se, "d=2 fraction " + fmt(f2));

    // d=3 transient control: plateaus well below the d=2 value
    std::vector<int> d3 = first_returns(simple_spec(3, 22), 2000, n);
    double f3 = return_fraction(d3, n);
    out.require(f3 < f2 - 0.2, "d=3 control " + fmt(f3) + " not clearly below " + fmt(f2));

    // iid environments: thresholds frozen from the independent pre-run
    std::vector<int> i1 = first_returns(iid_spec(1, 3, 161), 2000, n);
    double fi1 = return_fraction(i1, n);
    out.require(fi1 > 0.8, "iid d=1 fraction " + fmt(fi1));
    std::vector<int> i2 = first_returns(iid_spec(2, 3, 271), 2000, n);
    double fi2 = return_fraction(i2, n);
    out.require(fi2 > 0.6, "iid d=2 fraction " + fmt(fi2));

    out.detail = "d2 " + fmt(f2) + ", d3 " + fmt(f3) + ", iid d1 " + fmt(fi1) + ", iid d2 " +
                 fmt(fi2);
    return out;
}

Outcome criterion_determinism()
{
    namespace fs = std::filesystem;
    Outcome out;
    json doc;
    doc["environment"] = {{"kind", "iid-appendix"},
                          {"dims", 2},
                          {"seed", 4242},
                          {"lambda0", {{0, 0}, {0, 1}, {1, 0}}}};
    doc["mode"] = "annealed";
    doc["n_walks"] = 60;
    doc["n_steps"] = 200;
    doc["analyses"] = {"recurrence", "schmidt"};

    auto run_with = [&](int workers) {
        fs::path dir = fs::temp_directory_path() / ("rwre_acc_w" + std::to_string(workers));
        fs::remove_all(dir);
        doc["output_dir"] = dir.string();
        doc["workers"] = workers;
        run(parse_config(doc));
        return dir;
    };
    fs::path d1 = run_with(1), d8 = run_with(8);
    for (const char* f : {"ensemble.csv", "schmidt.csv", "recurrence.csv"}) {
        std::ifstream a(d1 / f, std::ios::binary), b(d8 / f, std::ios::binary);
        std::ostringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        out.require(a.good() && b.good() && sa.str() == sb.str(),
                    std::string(f) + " differs across worker counts");
    }
    fs::remove_all(d1);
    fs::remove_all(d8);
    out.detail = "csv artifacts byte-identical for workers 1 vs 8";
    return out;
}

} // namespace

int main()
{
    g_workers = std::max(1u, std::thread::hardware_concurrency());
    struct Entry {
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {"environment validity", criterion_environment_validity},
        {"measure preservation", criterion_measure_preservation},
        {"representation equivalence", criterion_representation_equivalence},
        {"cylinder decay", criterion_cylinder_decay},
        {"annealed CLT", criterion_annealed_clt},
        {"martingale audit", criterion_martingale_audit},
        {"schmidt criterion", criterion_schmidt},
        {"recurrence vs transience", criterion_recurrence},
        {"determinism across workers", criterion_determinism},
    };
    bool all = true;
    int id = 0;
    for (const Entry& e : entries) {
        ++id;
        Outcome out;
        try {
            out = e.fn();
        } catch (const std::exception& ex) {
            out.pass = false;
            out.detail = std::string("exception: ") + ex.what();
        }
        all = all && out.pass;
        std::printf("criterion %d (%s): %s (%s)\n", id, e.name, out.pass ? "PASS" : "FAIL",
                    out.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
