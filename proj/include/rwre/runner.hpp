#ifndef RWRE_RUNNER_HPP
#define RWRE_RUNNER_HPP

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rwre/dynamics.hpp"
#include "rwre/environment.hpp"
#include "rwre/serialize.hpp"
#include "rwre/stats.hpp"
#include "rwre/walker.hpp"

namespace rwre {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Verbosity from the RWRE_LOG environment variable (default: warn).
inline LogLevel log_level()
{
    const char* v = std::getenv("RWRE_LOG");
    if (!v) return LogLevel::Warn;
    std::string s(v);
    if (s == "error") return LogLevel::Error;
    if (s == "warn") return LogLevel::Warn;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
}

// Progress and diagnostics go to stderr only; stdout stays machine-readable.
inline void log(LogLevel lvl, const std::string& msg)
{
    static const char* names[] = {"error", "warn", "info", "debug"};
    if (static_cast<int>(lvl) <= static_cast<int>(log_level()))
        std::cerr << "[" << names[static_cast<int>(lvl)] << "] " << msg << "\n";
}

inline const std::vector<std::string>& known_analyses()
{
    static const std::vector<std::string> names = {"covariance", "clt",     "martingale",
                                                   "schmidt",    "recurrence", "cylinder-oracle"};
    return names;
}

struct RunConfig {
    EnvironmentSpec environment;
    EnsembleMode mode = EnsembleMode::Annealed;
    int n_walks = 1;
    int n_steps = 1;
    std::vector<std::string> analyses;
    std::string output_dir = ".";
    int workers = 0; // 0: decide at parse time from available parallelism

    // analysis parameters (defaults per module; all overridable)
    double eps_bisto = kEpsBisto;
    double eps_drift = kEpsDrift;
    int validate_sites = 200;
    double clt_threshold = kKolmogorov999;
    double schmidt_min_ratio = 0.05;
    std::vector<int> schmidt_n;        // default: dyadic grid up to n_steps
    std::vector<double> schmidt_rho = {0.2, 0.4, 0.8};
    int cov_env_samples = 200;
    int cylinder_n = 5;
};

inline json config_to_json(const RunConfig& cfg)
{
    json j;
    j["environment"] = spec_to_json(cfg.environment);
    j["mode"] = cfg.mode == EnsembleMode::Annealed ? "annealed" : "quenched";
    j["n_walks"] = cfg.n_walks;
    j["n_steps"] = cfg.n_steps;
    j["analyses"] = cfg.analyses;
    j["output_dir"] = cfg.output_dir;
    j["workers"] = cfg.workers;
    j["eps_bisto"] = cfg.eps_bisto;
    j["eps_drift"] = cfg.eps_drift;
    j["validate_sites"] = cfg.validate_sites;
    j["clt_threshold"] = cfg.clt_threshold;
    j["schmidt_min_ratio"] = cfg.schmidt_min_ratio;
    j["schmidt_n"] = cfg.schmidt_n;
    j["schmidt_rho"] = cfg.schmidt_rho;
    j["cov_env_samples"] = cfg.cov_env_samples;
    j["cylinder_n"] = cfg.cylinder_n;
    return j;
}

/**
 * Strict config parse: unknown keys and unknown analysis names are errors,
 * every message names the offending field.  Defaults are filled so that the
 * result re-serializes to a complete, replayable document.
 */
inline RunConfig parse_config(const json& j)
{
    if (!j.is_object()) detail::schema_error("config", "expected an object");
    detail::reject_unknown(j, "config",
                           {"environment", "mode", "n_walks", "n_steps", "analyses",
                            "output_dir", "workers", "eps_bisto", "eps_drift",
                            "validate_sites", "clt_threshold", "schmidt_min_ratio",
                            "schmidt_n", "schmidt_rho", "cov_env_samples", "cylinder_n"});
    RunConfig cfg;
    if (!j.contains("environment"))
        detail::schema_error("config.environment", "missing required field");
    cfg.environment = spec_from_json(j.at("environment"), "config.environment");

    std::string mode = detail::optional<std::string>(j, "config", "mode", "annealed");
    if (mode == "annealed")
        cfg.mode = EnsembleMode::Annealed;
    else if (mode == "quenched")
        cfg.mode = EnsembleMode::Quenched;
    else
        detail::schema_error("config.mode", "must be 'annealed' or 'quenched'");

    cfg.n_walks = detail::require<int>(j, "config", "n_walks");
    cfg.n_steps = detail::require<int>(j, "config", "n_steps");
    if (cfg.n_walks < 1) detail::schema_error("config.n_walks", "must be >= 1");
    if (cfg.n_steps < 1) detail::schema_error("config.n_steps", "must be >= 1");

    cfg.analyses = detail::require<std::vector<std::string>>(j, "config", "analyses");
    if (cfg.analyses.empty()) detail::schema_error("config.analyses", "must be nonempty");
    for (std::size_t i = 0; i < cfg.analyses.size(); ++i) {
        const auto& known = known_analyses();
        if (std::find(known.begin(), known.end(), cfg.analyses[i]) == known.end())
            detail::schema_error("config.analyses[" + std::to_string(i) + "]",
                                 "unknown analysis '" + cfg.analyses[i] + "'");
    }

    cfg.output_dir = detail::optional<std::string>(j, "config", "output_dir", ".");
    cfg.workers = detail::optional<int>(j, "config", "workers", 0);
    if (cfg.workers < 0) detail::schema_error("config.workers", "must be >= 0");
    if (cfg.workers == 0)
        cfg.workers = std::max(1u, std::thread::hardware_concurrency());

    cfg.eps_bisto = detail::optional<double>(j, "config", "eps_bisto", kEpsBisto);
    cfg.eps_drift = detail::optional<double>(j, "config", "eps_drift", kEpsDrift);
    cfg.validate_sites = detail::optional<int>(j, "config", "validate_sites", 200);
    cfg.clt_threshold = detail::optional<double>(j, "config", "clt_threshold", kKolmogorov999);
    cfg.schmidt_min_ratio = detail::optional<double>(j, "config", "schmidt_min_ratio", 0.05);
    cfg.schmidt_n = detail::optional<std::vector<int>>(j, "config", "schmidt_n", {});
    cfg.schmidt_rho =
        detail::optional<std::vector<double>>(j, "config", "schmidt_rho", {0.2, 0.4, 0.8});
    cfg.cov_env_samples = detail::optional<int>(j, "config", "cov_env_samples", 200);
    cfg.cylinder_n = detail::optional<int>(j, "config", "cylinder_n", 5);
    if (cfg.validate_sites < 1) detail::schema_error("config.validate_sites", "must be >= 1");
    if (cfg.cov_env_samples < 1) detail::schema_error("config.cov_env_samples", "must be >= 1");
    if (cfg.cylinder_n < 1) detail::schema_error("config.cylinder_n", "must be >= 1");
    if (cfg.schmidt_n.empty()) {
        for (int n = 2; n <= cfg.n_steps; n *= 2) cfg.schmidt_n.push_back(n);
        if (cfg.schmidt_n.empty()) cfg.schmidt_n.push_back(cfg.n_steps);
    }
    for (int n : cfg.schmidt_n)
        if (n < 1 || n > cfg.n_steps)
            detail::schema_error("config.schmidt_n", "entries must lie in [1, n_steps]");
    for (double r : cfg.schmidt_rho)
        if (!(r > 0.0)) detail::schema_error("config.schmidt_rho", "entries must be > 0");
    return cfg;
}

inline RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        detail::schema_error("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

/// Pseudorandom probe sites in a box around the origin, deterministic in seed.
inline std::vector<Vec> probe_sites(std::uint64_t seed, int dims, int count,
                                    std::int64_t radius = 1000)
{
    std::vector<Vec> sites;
    sites.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        Vec v(dims);
        for (int a = 0; a < dims; ++a) {
            double u = prf::uniform(seed, prf::tag_validate, static_cast<std::uint64_t>(k),
                                    static_cast<std::uint64_t>(a));
            v[a] = static_cast<std::int64_t>(u * static_cast<double>(2 * radius + 1)) - radius;
        }
        sites.push_back(v);
    }
    return sites;
}

struct RunResult {
    bool pass = false;
    json summary;
};

/**
 * End-to-end run: validate the environment, simulate the ensemble, execute
 * the requested analyses and write all artifacts into output_dir.  The
 * summary carries a pass/fail verdict per executed check; the result passes
 * iff every check passes.
 */
inline RunResult run(const RunConfig& cfg)
{
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    auto out_path = [&](const char* name) { return (fs::path(cfg.output_dir) / name).string(); };

    write_text_file(out_path("config.resolved.json"), config_to_json(cfg).dump(2) + "\n");

    json summary;
    summary["checks"] = json::object();
    bool all_pass = true;
    auto record = [&](const std::string& name, bool pass, json detail) {
        detail["pass"] = pass;
        summary["checks"][name] = std::move(detail);
        all_pass = all_pass && pass;
        log(pass ? LogLevel::Info : LogLevel::Error,
            name + ": " + (pass ? "pass" : "FAIL"));
    };

    log(LogLevel::Info, "validating environment");
    EnvironmentView view = make_view(cfg.environment);
    ValidationReport vrep =
        validate_environment(view, probe_sites(cfg.environment.seed, cfg.environment.dims,
                                               cfg.validate_sites),
                             cfg.eps_bisto, cfg.eps_drift);
    record("validate_environment", vrep.pass,
           {{"max_row_dev", vrep.max_row_dev},
            {"max_col_dev", vrep.max_col_dev},
            {"max_drift", vrep.max_drift},
            {"min_entry", vrep.min_entry},
            {"sites", cfg.validate_sites}});

    log(LogLevel::Info, "simulating " + std::to_string(cfg.n_walks) + " walks x " +
                            std::to_string(cfg.n_steps) + " steps");
    WalkEnsemble ens =
        sample_ensemble(cfg.environment, cfg.mode, cfg.n_walks, cfg.n_steps, cfg.workers);
    write_text_file(out_path("ensemble.csv"), ensemble_to_csv(ens));

    for (const std::string& analysis : cfg.analyses) {
        log(LogLevel::Info, "analysis: " + analysis);
        if (analysis == "covariance" || analysis == "clt") {
            CovarianceEstimate theo = theoretical_covariance(cfg.environment, cfg.cov_env_samples);
            CovarianceEstimate emp = empirical_covariance(ens);
            double sigma = covariance_max_sigma(theo, emp);
            json cov;
            cov["theoretical"] = covariance_to_json(theo);
            cov["empirical"] = covariance_to_json(emp);
            cov["max_sigma_discrepancy"] = sigma;
            write_text_file(out_path("covariance.json"), cov.dump(2) + "\n");
            if (analysis == "covariance")
                record("covariance", sigma <= 4.0, {{"max_sigma_discrepancy", sigma}});
            if (analysis == "clt") {
                CltReport clt = clt_distribution_test(ens, theo, cfg.clt_threshold);
                json coords = json::array();
                for (const auto& c : clt.coordinates)
                    coords.push_back({{"coordinate", c.coordinate},
                                      {"degenerate", c.degenerate},
                                      {"ks", c.ks},
                                      {"scaled", c.scaled}});
                record("clt", clt.pass,
                       {{"threshold", clt.threshold}, {"coordinates", coords}});
            }
        } else if (analysis == "martingale") {
            MartingaleAudit audit = martingale_audit(ens, cfg.eps_drift);
            record("martingale_audit", audit.pass,
                   {{"max_drift", audit.max_drift}, {"sites_checked", audit.sites_checked}});
        } else if (analysis == "schmidt") {
            SchmidtTable table = schmidt_criterion(ens, cfg.schmidt_n, cfg.schmidt_rho);
            write_text_file(out_path("schmidt.csv"), schmidt_to_csv(table));
            record("schmidt", table.min_ratio >= cfg.schmidt_min_ratio,
                   {{"min_ratio", table.min_ratio}, {"threshold", cfg.schmidt_min_ratio}});
        } else if (analysis == "recurrence") {
            RecurrenceReport rep = recurrence_stats(ens);
            write_text_file(out_path("recurrence.csv"), recurrence_to_csv(rep));
            bool monotone = std::is_sorted(rep.return_fraction_by_step.begin(),
                                           rep.return_fraction_by_step.end());
            json detail = recurrence_to_json(rep);
            detail["monotone"] = monotone;
            record("recurrence", monotone, std::move(detail));
        } else if (analysis == "cylinder-oracle") {
            EquivalenceReport rep = equivalence_check(view, cfg.cylinder_n);
            record("cylinder_oracle",
                   rep.max_discrepancy <= 1e-12 && std::abs(rep.total_measure - 1.0) <= 1e-9,
                   {{"n_cylinders", rep.n_cylinders},
                    {"max_discrepancy", rep.max_discrepancy},
                    {"total_measure", rep.total_measure}});
        }
    }

    summary["pass"] = all_pass;
    write_text_file(out_path("summary.json"), summary.dump(2) + "\n");
    return RunResult{all_pass, std::move(summary)};
}

} // namespace rwre

#endif // RWRE_RUNNER_HPP
