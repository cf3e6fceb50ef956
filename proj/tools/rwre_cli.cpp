// Command-line surface for the random-walk-in-random-environment lab:
// environment generation, ensemble simulation, statistical verification,
// and end-to-end reproducible runs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rwre/dynamics.hpp"
#include "rwre/environment.hpp"
#include "rwre/runner.hpp"
#include "rwre/serialize.hpp"
#include "rwre/stats.hpp"
#include "rwre/walker.hpp"

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string output = ".";
    std::vector<std::string> analyses;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true)
{
    auto* c = cmd->add_option("--config", opts.config_path, "JSON run configuration");
    if (config_required) c->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "Override the environment seed");
    cmd->add_option("--workers", opts.workers, "Worker thread count (0 = hardware)");
    cmd->add_option("--output", opts.output, "Output directory");
    cmd->add_option("--analysis", opts.analyses,
                    "Analysis to run (repeatable): covariance, clt, martingale, schmidt, "
                    "recurrence, cylinder-oracle");
}

rwre::RunConfig load_config(const CommonOpts& opts)
{
    rwre::RunConfig cfg = rwre::parse_config(read_file(opts.config_path));
    if (opts.seed) cfg.environment.seed = *opts.seed;
    if (opts.workers) {
        cfg.workers = *opts.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                         : *opts.workers;
    }
    if (!opts.output.empty() && opts.output != ".") cfg.output_dir = opts.output;
    if (!opts.analyses.empty()) {
        for (const std::string& a : opts.analyses) {
            const auto& known = rwre::known_analyses();
            if (std::find(known.begin(), known.end(), a) == known.end())
                throw std::invalid_argument("unknown analysis '" + a + "'");
        }
        cfg.analyses = opts.analyses;
    }
    return cfg;
}

// gen-env: sample the environment, validate it, and dump kernels on a
// window around the origin so oracle data can be inspected independently.
int cmd_gen_env(const CommonOpts& opts, std::int64_t radius)
{
    rwre::RunConfig cfg = load_config(opts);
    std::filesystem::create_directories(cfg.output_dir);
    rwre::EnvironmentView view = rwre::make_view(cfg.environment);

    std::vector<rwre::Vec> sites;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(cfg.environment.dims), -radius);
    while (true) {
        rwre::Vec v(cfg.environment.dims);
        for (int a = 0; a < cfg.environment.dims; ++a) v[a] = idx[static_cast<std::size_t>(a)];
        sites.push_back(v);
        int a = 0;
        for (; a < cfg.environment.dims; ++a) {
            if (++idx[static_cast<std::size_t>(a)] <= radius) break;
            idx[static_cast<std::size_t>(a)] = -radius;
        }
        if (a == cfg.environment.dims) break;
    }

    rwre::ValidationReport rep =
        rwre::validate_environment(view, sites, cfg.eps_bisto, cfg.eps_drift);

    rwre::json out;
    out["spec"] = rwre::spec_to_json(cfg.environment);
    rwre::json lambda = rwre::json::array();
    for (const rwre::Vec& d : view.lambda.displacements) {
        rwre::json row = rwre::json::array();
        for (int a = 0; a < d.dims; ++a) row.push_back(d[a]);
        lambda.push_back(row);
    }
    out["lambda"] = lambda;
    rwre::json kernels = rwre::json::array();
    for (const rwre::Vec& x : sites) {
        rwre::json site = rwre::json::array();
        for (int a = 0; a < x.dims; ++a) site.push_back(x[a]);
        kernels.push_back({{"site", site}, {"q", rwre::kernel_at(view, x)}});
    }
    out["kernels"] = kernels;
    out["validation"] = {{"pass", rep.pass},
                         {"max_row_dev", rep.max_row_dev},
                         {"max_col_dev", rep.max_col_dev},
                         {"max_drift", rep.max_drift},
                         {"min_entry", rep.min_entry}};
    rwre::write_text_file(
        (std::filesystem::path(cfg.output_dir) / "environment.json").string(),
        out.dump(2) + "\n");
    std::cout << out["validation"].dump() << "\n";
    return rep.pass ? 0 : 1;
}

// simulate: ensembles only, plus an optional exact skew-product orbit dump.
int cmd_simulate(const CommonOpts& opts, int orbit_steps, double orbit_s)
{
    rwre::RunConfig cfg = load_config(opts);
    std::filesystem::create_directories(cfg.output_dir);
    rwre::write_text_file(
        (std::filesystem::path(cfg.output_dir) / "config.resolved.json").string(),
        rwre::config_to_json(cfg).dump(2) + "\n");

    rwre::WalkEnsemble ens =
        rwre::sample_ensemble(cfg.environment, cfg.mode, cfg.n_walks, cfg.n_steps, cfg.workers);
    rwre::write_text_file((std::filesystem::path(cfg.output_dir) / "ensemble.csv").string(),
                          rwre::ensemble_to_csv(ens));

    if (orbit_steps > 0) {
        std::string nd;
        rwre::SkewState st =
            rwre::make_state(orbit_s, rwre::make_view(cfg.environment));
        for (int k = 0; k < orbit_steps; ++k) {
            rwre::FiberPartition part = rwre::build_partition(
                rwre::kernel_at(st.view, rwre::zero_vec(st.view.lambda.dims)));
            int cell = rwre::locate(st.s, part);
            rwre::json rec;
            rec["k"] = k;
            rec["s"] = st.s;
            rec["cell"] = cell;
            rwre::json disp = rwre::json::array();
            for (int a = 0; a < st.view.lambda.dims; ++a)
                disp.push_back(st.view.lambda[cell][a]);
            rec["displacement"] = disp;
            rwre::json pos = rwre::json::array();
            for (int a = 0; a < st.view.lambda.dims; ++a)
                pos.push_back(st.view.origin_offset[a]);
            rec["position"] = pos;
            nd += rec.dump() + "\n";
            st = rwre::step(st);
        }
        rwre::write_text_file((std::filesystem::path(cfg.output_dir) / "orbit.ndjson").string(),
                              nd);
    }
    std::cout << "{\"n_walks\":" << cfg.n_walks << ",\"n_steps\":" << cfg.n_steps << "}\n";
    return 0;
}

// verify: analyses on a previously written config; trajectories are
// reconstructed deterministically from the config seeds, so no trajectory
// data needs to be re-read.
int cmd_verify(const CommonOpts& opts)
{
    rwre::RunConfig cfg = load_config(opts);
    rwre::RunResult res = rwre::run(cfg);
    std::cout << res.summary.dump(2) << "\n";
    return res.pass ? 0 : 1;
}

int cmd_run(const CommonOpts& opts)
{
    rwre::RunConfig cfg = load_config(opts);
    rwre::RunResult res = rwre::run(cfg);
    std::cout << res.summary.dump(2) << "\n";
    return res.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Random walks in bistochastic random environments: simulation and "
                 "statistical verification"};
    app.require_subcommand(1);

    CommonOpts gen_opts, sim_opts, ver_opts, run_opts;
    std::int64_t gen_radius = 2;
    int orbit_steps = 0;
    double orbit_s = 0.5;

    CLI::App* gen = app.add_subcommand("gen-env", "Sample, validate and dump an environment window");
    add_common(gen, gen_opts);
    gen->add_option("--radius", gen_radius, "Half-width of the dumped window")->check(CLI::NonNegativeNumber);

    CLI::App* sim = app.add_subcommand("simulate", "Simulate a walk ensemble");
    add_common(sim, sim_opts);
    sim->add_option("--orbit", orbit_steps, "Also dump an exact skew-product orbit of this length");
    sim->add_option("--orbit-s", orbit_s, "Initial fiber coordinate for the orbit dump")
        ->check(CLI::Range(0.0, 1.0));

    CLI::App* ver = app.add_subcommand("verify", "Run analyses for an existing configuration");
    add_common(ver, ver_opts);

    CLI::App* runc = app.add_subcommand("run", "End-to-end: validate, simulate, analyze");
    add_common(runc, run_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_env(gen_opts, gen_radius);
        if (sim->parsed()) return cmd_simulate(sim_opts, orbit_steps, orbit_s);
        if (ver->parsed()) return cmd_verify(ver_opts);
        if (runc->parsed()) return cmd_run(run_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
