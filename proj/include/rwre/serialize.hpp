#ifndef RWRE_SERIALIZE_HPP
#define RWRE_SERIALIZE_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwre/environment.hpp"
#include "rwre/stats.hpp"
#include "rwre/walker.hpp"

namespace rwre {

using nlohmann::json;

/// Shortest round-trippable decimal form of a double, locale-independent.
inline std::string fmt_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    // trim to the shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[32];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
        if (std::strtod(shorter, nullptr) == x) return shorter;
    }
    return buf;
}

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what)
{
    throw std::invalid_argument("config error at " + path + ": " + what);
}

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed)
{
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known) schema_error(path + "." + it.key(), "unknown key");
    }
}

template <class T>
inline T require(const json& obj, const std::string& path, const char* key)
{
    if (!obj.contains(key)) schema_error(path + "." + key, "missing required field");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        schema_error(path + "." + std::string(key), e.what());
    }
}

template <class T>
inline T optional(const json& obj, const std::string& path, const char* key, T fallback)
{
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        schema_error(path + "." + std::string(key), e.what());
    }
}

inline JumpSet jump_set_from_json(const json& arr, int dims, const std::string& path)
{
    if (!arr.is_array() || arr.empty()) schema_error(path, "expected a nonempty array of vectors");
    JumpSet js;
    js.dims = dims;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& row = arr[i];
        if (!row.is_array() || static_cast<int>(row.size()) != dims)
            schema_error(path + "[" + std::to_string(i) + "]",
                         "expected an array of " + std::to_string(dims) + " integers");
        Vec v(dims);
        for (int a = 0; a < dims; ++a) v[a] = row[static_cast<std::size_t>(a)].get<std::int64_t>();
        js.displacements.push_back(v);
    }
    return js;
}

inline json jump_set_to_json(const JumpSet& js)
{
    json arr = json::array();
    for (const Vec& v : js.displacements) {
        json row = json::array();
        for (int a = 0; a < v.dims; ++a) row.push_back(v[a]);
        arr.push_back(row);
    }
    return arr;
}

} // namespace detail

inline std::string kind_name(EnvKind k)
{
    switch (k) {
    case EnvKind::SimpleSymmetric: return "simple-symmetric";
    case EnvKind::IidAppendix: return "iid-appendix";
    case EnvKind::ExplicitPeriodic: return "explicit-periodic";
    }
    throw std::logic_error("kind_name: unreachable");
}

inline std::string sampler_name(SamplerKind s)
{
    return s == SamplerKind::Sinkhorn ? "sinkhorn" : "birkhoff";
}

inline json spec_to_json(const EnvironmentSpec& spec)
{
    json j;
    j["kind"] = kind_name(spec.kind);
    j["seed"] = spec.seed;
    j["dims"] = spec.dims;
    if (spec.kind == EnvKind::IidAppendix) {
        j["lambda0"] = detail::jump_set_to_json(spec.lambda0);
        j["sampler"] = sampler_name(spec.sampler);
        if (spec.sampler == SamplerKind::Sinkhorn)
            j["sampler_params"] = {{"tol", spec.sampler_params.tol},
                                   {"max_iter", spec.sampler_params.max_iter}};
        else
            j["sampler_params"] = {{"num_perms", spec.sampler_params.num_perms}};
    } else if (spec.kind == EnvKind::ExplicitPeriodic) {
        j["period"] = spec.period;
        j["lambda"] = detail::jump_set_to_json(spec.table_lambda);
        j["kernels"] = spec.kernels;
    }
    return j;
}

/// Strict parse of an environment spec; unknown keys are errors and all
/// messages carry the offending field path.
inline EnvironmentSpec spec_from_json(const json& j, const std::string& path = "environment")
{
    if (!j.is_object()) detail::schema_error(path, "expected an object");
    EnvironmentSpec spec;
    std::string kind = detail::require<std::string>(j, path, "kind");
    if (kind == "simple-symmetric")
        spec.kind = EnvKind::SimpleSymmetric;
    else if (kind == "iid-appendix")
        spec.kind = EnvKind::IidAppendix;
    else if (kind == "explicit-periodic")
        spec.kind = EnvKind::ExplicitPeriodic;
    else
        detail::schema_error(path + ".kind", "unknown kind '" + kind + "'");

    spec.seed = detail::optional<std::uint64_t>(j, path, "seed", 0);
    spec.dims = detail::require<int>(j, path, "dims");
    if (spec.dims < 1 || spec.dims > kMaxDims)
        detail::schema_error(path + ".dims", "must be in [1, " + std::to_string(kMaxDims) + "]");

    switch (spec.kind) {
    case EnvKind::SimpleSymmetric:
        detail::reject_unknown(j, path, {"kind", "seed", "dims"});
        break;
    case EnvKind::IidAppendix: {
        detail::reject_unknown(j, path, {"kind", "seed", "dims", "lambda0", "sampler",
                                         "sampler_params"});
        if (!j.contains("lambda0")) detail::schema_error(path + ".lambda0", "missing required field");
        spec.lambda0 = detail::jump_set_from_json(j.at("lambda0"), spec.dims, path + ".lambda0");
        try {
            spec.lambda0.validate();
        } catch (const std::exception& e) {
            detail::schema_error(path + ".lambda0", e.what());
        }
        std::string sampler = detail::optional<std::string>(j, path, "sampler", "sinkhorn");
        if (sampler == "sinkhorn")
            spec.sampler = SamplerKind::Sinkhorn;
        else if (sampler == "birkhoff")
            spec.sampler = SamplerKind::Birkhoff;
        else
            detail::schema_error(path + ".sampler", "unknown sampler '" + sampler + "'");
        if (j.contains("sampler_params")) {
            const json& p = j.at("sampler_params");
            std::string ppath = path + ".sampler_params";
            if (!p.is_object()) detail::schema_error(ppath, "expected an object");
            if (spec.sampler == SamplerKind::Sinkhorn) {
                detail::reject_unknown(p, ppath, {"tol", "max_iter"});
                spec.sampler_params.tol = detail::optional<double>(p, ppath, "tol", 1e-12);
                spec.sampler_params.max_iter = detail::optional<int>(p, ppath, "max_iter", 10000);
                if (!(spec.sampler_params.tol > 0.0))
                    detail::schema_error(ppath + ".tol", "must be positive");
                if (spec.sampler_params.max_iter < 1)
                    detail::schema_error(ppath + ".max_iter", "must be >= 1");
            } else {
                detail::reject_unknown(p, ppath, {"num_perms"});
                spec.sampler_params.num_perms = detail::optional<int>(p, ppath, "num_perms", 0);
                if (spec.sampler_params.num_perms < 0)
                    detail::schema_error(ppath + ".num_perms", "must be >= 0");
            }
        }
        break;
    }
    case EnvKind::ExplicitPeriodic: {
        detail::reject_unknown(j, path, {"kind", "seed", "dims", "period", "lambda", "kernels"});
        spec.period = detail::require<std::vector<std::int64_t>>(j, path, "period");
        if (static_cast<int>(spec.period.size()) != spec.dims)
            detail::schema_error(path + ".period", "length must equal dims");
        if (!j.contains("lambda")) detail::schema_error(path + ".lambda", "missing required field");
        spec.table_lambda = detail::jump_set_from_json(j.at("lambda"), spec.dims, path + ".lambda");
        spec.kernels = detail::require<std::vector<std::vector<double>>>(j, path, "kernels");
        break;
    }
    }
    return spec;
}

inline json covariance_to_json(const CovarianceEstimate& est)
{
    const int d = est.dims;
    auto as_rows = [&](const std::vector<double>& flat) {
        json rows = json::array();
        for (int a = 0; a < d; ++a) {
            json row = json::array();
            for (int b = 0; b < d; ++b)
                row.push_back(flat[static_cast<std::size_t>(a) * static_cast<std::size_t>(d) +
                                   static_cast<std::size_t>(b)]);
            rows.push_back(row);
        }
        return rows;
    };
    json j;
    j["dims"] = d;
    j["n_samples"] = est.n_samples;
    j["matrix"] = as_rows(est.matrix);
    j["standard_errors"] = as_rows(est.standard_errors);
    if (!est.mean.empty()) j["mean"] = est.mean;
    return j;
}

inline std::string schmidt_to_csv(const SchmidtTable& table)
{
    std::string out = "n,rho,r_est,ratio,stderr\n";
    for (const SchmidtRow& r : table.rows) {
        out += std::to_string(r.n) + "," + fmt_double(r.rho) + "," + fmt_double(r.r_est) + "," +
               fmt_double(r.ratio) + "," + fmt_double(r.stderr_) + "\n";
    }
    return out;
}

inline std::string recurrence_to_csv(const RecurrenceReport& rep)
{
    std::string out = "n,return_fraction\n";
    for (std::size_t n = 1; n < rep.return_fraction_by_step.size(); ++n)
        out += std::to_string(n) + "," + fmt_double(rep.return_fraction_by_step[n]) + "\n";
    return out;
}

inline json recurrence_to_json(const RecurrenceReport& rep)
{
    json hist = json::object();
    for (auto [n, count] : rep.first_return_histogram) hist[std::to_string(n)] = count;
    json j;
    j["n_walks"] = rep.n_walks;
    j["first_return_histogram"] = hist;
    j["final_return_fraction"] =
        rep.return_fraction_by_step.empty() ? 0.0 : rep.return_fraction_by_step.back();
    return j;
}

inline std::string ensemble_to_csv(const WalkEnsemble& ens)
{
    const int d = ens.spec.dims;
    std::string out = "walk_id,step";
    for (int a = 1; a <= d; ++a) out += ",x_" + std::to_string(a);
    out += "\n";
    for (std::size_t j = 0; j < ens.trajectories.size(); ++j) {
        const Trajectory& t = ens.trajectories[j];
        for (std::size_t k = 0; k < t.positions.size(); ++k) {
            out += std::to_string(j) + "," + std::to_string(k);
            for (int a = 0; a < d; ++a) out += "," + std::to_string(t.positions[k][a]);
            out += "\n";
        }
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

} // namespace rwre

#endif // RWRE_SERIALIZE_HPP
