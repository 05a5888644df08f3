#pragma once

// End-to-end orchestration: config, empirical stages, optional model fits,
// report/plot-data writers and the hash manifest.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "asymret/core/error.hpp"
#include "asymret/core/rng.hpp"
#include "asymret/diststats.hpp"
#include "asymret/ingest.hpp"
#include "asymret/returns.hpp"
#include "asymret/svmodels.hpp"
#include "asymret/tailfit.hpp"

namespace asymret {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config

struct TailConfig {
    TailPolicy policy;
    double ci_level = 0.95;
    std::size_t n_boot = 1000; // 0 disables the band
    double u_level = 0.95;
    std::size_t max_rank = 10;
    bool bonferroni = false;
};

struct ModelConfig {
    bool enabled = false;
    std::vector<DensityFamily> families{DensityFamily::student_mm};
    std::vector<std::size_t> taus{1};
    std::size_t table_nodes = 801;
    std::size_t grid_points = 401; // model-density figure
};

struct SimulationConfig {
    VarianceModel model = VarianceModel::MM;
    SvModelParams params = SvModelParams::mm(0.95e-5, 1.5e-4, 0.1);
    double dt = 0.1;
    std::size_t days = 100000;
    std::optional<double> v0; // defaults to theta
    DriftMode drift = DriftMode::none;
    double drift_offset = 0.0;
    std::vector<std::size_t> taus{1, 20, 100};
};

struct PipelineConfig {
    std::string input_path;
    LoadOptions load;
    std::vector<std::size_t> taus{1, 5, 10, 20};
    std::vector<std::size_t> moment_taus; // empty: 1..100
    Binning binning;
    TailConfig tail;
    ModelConfig model;
    SimulationConfig simulation;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string output_dir = "asymret-out";
    std::string emit_returns_dir;

    [[nodiscard]] std::vector<std::size_t> effective_moment_taus() const
    {
        if (!moment_taus.empty()) return moment_taus;
        std::vector<std::size_t> t(100);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = i + 1;
        return t;
    }
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& what) { throw Error(ErrorCode::config_invalid, what); }

inline void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where)
{
    if (!obj.is_object()) config_fail(where + " must be an object");
    for (const auto& [key, _] : obj.items())
        if (!known.count(key)) config_fail("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        config_fail(where + "." + key + ": " + e.what());
    }
}

inline DensityFamily family_from(const std::string& s)
{
    if (s == "student") return DensityFamily::student_mm;
    if (s == "mhm") return DensityFamily::mhm;
    if (s == "skewed") return DensityFamily::skewed_mm;
    config_fail("unknown density family '" + s + "'");
}

inline VarianceModel model_from(const std::string& s)
{
    if (s == "MM") return VarianceModel::MM;
    if (s == "HM") return VarianceModel::HM;
    if (s == "MHM") return VarianceModel::MHM;
    config_fail("unknown variance model '" + s + "'");
}

inline void check_taus(const std::vector<std::size_t>& taus, const std::string& where)
{
    for (auto t : taus)
        if (t < 1) config_fail(where + " entries must be >= 1");
}

} // namespace detail

inline void validate_config(const PipelineConfig& c)
{
    if (c.taus.empty()) detail::config_fail("taus must not be empty");
    detail::check_taus(c.taus, "taus");
    detail::check_taus(c.moment_taus, "moment_taus");
    detail::check_taus(c.model.taus, "model.taus");
    detail::check_taus(c.simulation.taus, "simulation.taus");
    if (!(c.tail.ci_level > 0.5 && c.tail.ci_level < 1.0)) detail::config_fail("tail.ci_level must lie in (0.5, 1)");
    if (!(c.tail.u_level > 0.0 && c.tail.u_level < 1.0)) detail::config_fail("tail.u_level must lie in (0, 1)");
    if (c.tail.n_boot != 0 && c.tail.n_boot < 1000) detail::config_fail("tail.n_boot must be 0 or >= 1000");
    if (c.tail.max_rank < 1) detail::config_fail("tail.max_rank must be >= 1");
    if (c.tail.policy.kind == TailPolicy::Kind::fraction
        && !(c.tail.policy.fraction > 0.0 && c.tail.policy.fraction <= 1.0))
        detail::config_fail("tail.fraction must lie in (0, 1]");
    if (c.tail.policy.kind == TailPolicy::Kind::threshold && !(c.tail.policy.threshold > 0.0))
        detail::config_fail("tail.threshold must be > 0");
    if (c.load.date_col.empty() || c.load.price_col.empty()) detail::config_fail("column names must not be empty");
    const bool stochastic = c.tail.n_boot > 0;
    if (stochastic && !c.seed) detail::config_fail("a seed is required when the bootstrap band is enabled");
}

inline PipelineConfig config_from_json(const json& j)
{
    using detail::read;
    PipelineConfig c;
    detail::reject_unknown(j, {"input", "taus", "moment_taus", "binning", "tail", "model", "simulation", "seed",
                               "threads", "output_dir", "emit_returns"},
                           "config");
    if (j.contains("input")) {
        const auto& in = j["input"];
        detail::reject_unknown(in, {"path", "date_col", "price_col", "delimiter", "date_format", "strict", "label"},
                               "input");
        read(in, "path", c.input_path, "input");
        read(in, "date_col", c.load.date_col, "input");
        read(in, "price_col", c.load.price_col, "input");
        std::string delim(1, c.load.delimiter);
        read(in, "delimiter", delim, "input");
        if (delim.size() != 1) detail::config_fail("input.delimiter must be one character");
        c.load.delimiter = delim[0];
        read(in, "date_format", c.load.date_format, "input");
        read(in, "strict", c.load.strict, "input");
        read(in, "label", c.load.label, "input");
    }
    read(j, "taus", c.taus, "config");
    read(j, "moment_taus", c.moment_taus, "config");
    if (j.contains("binning")) {
        const auto& b = j["binning"];
        detail::reject_unknown(b, {"policy", "bins", "width"}, "binning");
        std::string policy = "freedman_diaconis";
        read(b, "policy", policy, "binning");
        if (policy == "freedman_diaconis") {
            c.binning = Binning::freedman_diaconis();
        } else if (policy == "fixed_count") {
            std::size_t n = 50;
            read(b, "bins", n, "binning");
            if (n < 1) detail::config_fail("binning.bins must be >= 1");
            c.binning = Binning::fixed_count(n);
        } else if (policy == "fixed_width") {
            double w = 0.0;
            read(b, "width", w, "binning");
            if (!(w > 0.0)) detail::config_fail("binning.width must be > 0");
            c.binning = Binning::fixed_width(w);
        } else {
            detail::config_fail("unknown binning policy '" + policy + "'");
        }
    }
    if (j.contains("tail")) {
        const auto& t = j["tail"];
        detail::reject_unknown(t, {"policy", "fraction", "threshold", "ci_level", "n_boot", "u_level", "max_rank",
                                   "bonferroni"},
                               "tail");
        std::string policy = "fraction";
        read(t, "policy", policy, "tail");
        read(t, "fraction", c.tail.policy.fraction, "tail");
        read(t, "threshold", c.tail.policy.threshold, "tail");
        if (policy == "fraction")
            c.tail.policy.kind = TailPolicy::Kind::fraction;
        else if (policy == "threshold")
            c.tail.policy.kind = TailPolicy::Kind::threshold;
        else
            detail::config_fail("unknown tail policy '" + policy + "'");
        read(t, "ci_level", c.tail.ci_level, "tail");
        read(t, "n_boot", c.tail.n_boot, "tail");
        read(t, "u_level", c.tail.u_level, "tail");
        read(t, "max_rank", c.tail.max_rank, "tail");
        read(t, "bonferroni", c.tail.bonferroni, "tail");
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        detail::reject_unknown(m, {"enabled", "families", "taus", "table_nodes", "grid_points"}, "model");
        read(m, "enabled", c.model.enabled, "model");
        if (m.contains("families")) {
            std::vector<std::string> names;
            read(m, "families", names, "model");
            c.model.families.clear();
            for (const auto& n : names) {
                const auto f = detail::family_from(n);
                if (f == DensityFamily::skewed_mm) detail::config_fail("model.families: skewed cannot be fitted");
                c.model.families.push_back(f);
            }
        }
        read(m, "taus", c.model.taus, "model");
        read(m, "table_nodes", c.model.table_nodes, "model");
        read(m, "grid_points", c.model.grid_points, "model");
        if (c.model.grid_points < 2) detail::config_fail("model.grid_points must be >= 2");
    }
    if (j.contains("simulation")) {
        const auto& s = j["simulation"];
        detail::reject_unknown(s, {"model", "gamma", "theta", "kappa_m", "kappa_h", "alpha", "p", "q", "dt", "days",
                                   "v0", "drift_mode", "drift_offset", "taus"},
                               "simulation");
        auto& sim = c.simulation;
        std::string model = "MM";
        read(s, "model", model, "simulation");
        sim.model = detail::model_from(model);
        double gamma = 0.1, theta = 0.95e-5;
        read(s, "gamma", gamma, "simulation");
        read(s, "theta", theta, "simulation");
        const bool shaped = s.contains("alpha") || s.contains("p") || s.contains("q");
        const bool raw = s.contains("kappa_m") || s.contains("kappa_h");
        if (shaped && raw) detail::config_fail("simulation: give either kappas or alpha/p/q, not both");
        try {
            if (raw) {
                sim.params = {gamma, theta, 0.0, 0.0};
                read(s, "kappa_m", sim.params.kappa_m, "simulation");
                read(s, "kappa_h", sim.params.kappa_h, "simulation");
            } else if (sim.model == VarianceModel::MM) {
                double alpha = 1.5e-4;
                read(s, "alpha", alpha, "simulation");
                sim.params = SvModelParams::mm(theta, alpha, gamma);
            } else if (sim.model == VarianceModel::MHM) {
                double p = 2.0, q = 1.0 + 1.5e-4 / 0.95e-5;
                read(s, "p", p, "simulation");
                read(s, "q", q, "simulation");
                sim.params = SvModelParams::mhm(theta, p, q, gamma);
            } else {
                double p = 2.0;
                read(s, "p", p, "simulation");
                sim.params = {gamma, theta, 0.0, std::sqrt(2.0 * gamma * theta / p)};
            }
            sim.params.validate();
        } catch (const Error& e) {
            detail::config_fail(std::string("simulation: ") + e.what());
        }
        read(s, "dt", sim.dt, "simulation");
        read(s, "days", sim.days, "simulation");
        if (s.contains("v0")) {
            double v0 = 0.0;
            read(s, "v0", v0, "simulation");
            sim.v0 = v0;
        }
        std::string drift = "none";
        read(s, "drift_mode", drift, "simulation");
        if (drift == "none")
            sim.drift = DriftMode::none;
        else if (drift == "ito_half")
            sim.drift = DriftMode::ito_half;
        else
            detail::config_fail("unknown drift_mode '" + drift + "'");
        read(s, "drift_offset", sim.drift_offset, "simulation");
        read(s, "taus", sim.taus, "simulation");
        if (!(sim.dt > 0.0) || sim.dt > 1.0) detail::config_fail("simulation.dt must lie in (0, 1]");
        const double steps = 1.0 / sim.dt;
        if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
            detail::config_fail("simulation.dt must divide one day");
        if (sim.days < 2) detail::config_fail("simulation.days must be >= 2");
    }
    if (j.contains("seed")) {
        std::uint64_t seed = 0;
        read(j, "seed", seed, "config");
        c.seed = seed;
    }
    read(j, "threads", c.threads, "config");
    read(j, "output_dir", c.output_dir, "config");
    read(j, "emit_returns", c.emit_returns_dir, "config");
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config_invalid, "cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config_invalid, path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

namespace detail {

inline const char* policy_name(Binning::Policy p)
{
    switch (p) {
    case Binning::Policy::freedman_diaconis: return "freedman_diaconis";
    case Binning::Policy::fixed_count: return "fixed_count";
    case Binning::Policy::fixed_width: return "fixed_width";
    }
    return "?";
}

} // namespace detail

/// Every effective setting, defaults included. `threads` is left out: it
/// must not influence any output, so it is not part of the report identity.
inline json config_to_json(const PipelineConfig& c)
{
    json j;
    j["input"] = {{"path", c.input_path},
                  {"date_col", c.load.date_col},
                  {"price_col", c.load.price_col},
                  {"delimiter", std::string(1, c.load.delimiter)},
                  {"date_format", c.load.date_format},
                  {"strict", c.load.strict},
                  {"label", c.load.label}};
    j["taus"] = c.taus;
    j["moment_taus"] = c.effective_moment_taus();
    json b = {{"policy", detail::policy_name(c.binning.policy)}};
    if (c.binning.policy == Binning::Policy::fixed_count) b["bins"] = c.binning.bins;
    if (c.binning.policy == Binning::Policy::fixed_width) b["width"] = c.binning.width;
    j["binning"] = b;
    json t;
    t["policy"] = c.tail.policy.kind == TailPolicy::Kind::fraction ? "fraction" : "threshold";
    if (c.tail.policy.kind == TailPolicy::Kind::fraction)
        t["fraction"] = c.tail.policy.fraction;
    else
        t["threshold"] = c.tail.policy.threshold;
    t["ci_level"] = c.tail.ci_level;
    t["n_boot"] = c.tail.n_boot;
    t["u_level"] = c.tail.u_level;
    t["max_rank"] = c.tail.max_rank;
    t["bonferroni"] = c.tail.bonferroni;
    j["tail"] = t;
    json fams = json::array();
    for (auto f : c.model.families) fams.push_back(to_string(f));
    j["model"] = {{"enabled", c.model.enabled},
                  {"families", fams},
                  {"taus", c.model.taus},
                  {"table_nodes", c.model.table_nodes},
                  {"grid_points", c.model.grid_points}};
    const auto& s = c.simulation;
    j["simulation"] = {{"model", to_string(s.model)},
                       {"gamma", s.params.gamma},
                       {"theta", s.params.theta},
                       {"kappa_m", s.params.kappa_m},
                       {"kappa_h", s.params.kappa_h},
                       {"dt", s.dt},
                       {"days", s.days},
                       {"v0", s.v0.value_or(s.params.theta)},
                       {"drift_mode", s.drift == DriftMode::none ? "none" : "ito_half"},
                       {"drift_offset", s.drift_offset},
                       {"taus", s.taus}};
    if (c.seed)
        j["seed"] = *c.seed;
    else
        j["seed"] = nullptr;
    j["output_dir"] = c.output_dir;
    j["emit_returns"] = c.emit_returns_dir;
    return j;
}

// ---------------------------------------------------------------------------
// Report bundle

struct CountsRecord {
    std::size_t tau = 1;
    std::size_t total = 0, gains = 0, losses = 0, zeros = 0;
};

struct TailRecord {
    std::size_t tau = 1;
    Side side = Side::gain;
    EmpiricalCCDF ccdf;
    TailRegion region;
    TailFit fit;
    std::vector<RankTest> ranks;
};

struct ModelFitRecord {
    std::size_t tau = 1;
    DensityFamily family = DensityFamily::student_mm;
    std::optional<FitReport> fit;
    std::string error; // set when the fit failed
    double m2_slope = 0.0; // slope of the empirical m2(tau) fit, for comparison with theta
};

struct ReportBundle {
    PipelineConfig config;
    std::string label;
    std::vector<Date> dates;
    ValidationReport validation;
    LogReturnCurve curve;
    double mu = 0.0;
    std::vector<TrendFit> trends;
    std::vector<CountsRecord> counts;
    std::map<std::size_t, ReturnSample> samples; // taus of the tail stage
    std::map<std::size_t, EmpiricalPDF> pdfs;
    ScalingTable scaling;
    std::vector<TailRecord> tails;
    bool model_stage_run = false;
    std::vector<ModelFitRecord> model_fits;
};

inline ReportBundle run_pipeline(const PipelineConfig& config, const PriceSeries& series,
                                 const ValidationReport& validation = {})
{
    validate_config(config);
    ReportBundle b;
    b.config = config;
    b.label = series.label();
    b.dates = series.dates();
    b.validation = validation;
    b.curve = log_return_curve(series);
    b.mu = fit_trend(b.curve, 1).slope;

    const auto mtaus = config.effective_moment_taus();
    std::set<std::size_t> trend_taus(mtaus.begin(), mtaus.end());
    trend_taus.insert(config.taus.begin(), config.taus.end());
    for (auto tau : trend_taus)
        if (b.curve.size() > 2 * tau) b.trends.push_back(fit_trend(b.curve, tau));

    for (auto tau : config.taus) {
        auto sample = accumulated_returns(b.curve, tau, b.mu);
        const auto split = partition_gains_losses(sample);
        b.counts.push_back({tau, split.total(), split.gains.size(), split.losses.size(), split.zeros});
        b.pdfs.emplace(tau, empirical_pdf(sample.values, config.binning));
        for (Side side : {Side::gain, Side::loss}) {
            TailRecord rec;
            rec.tau = tau;
            rec.side = side;
            rec.ccdf = empirical_ccdf(side == Side::gain ? split.gains : split.losses, side);
            rec.region = select_tail(rec.ccdf, config.tail.policy);
            rec.fit = fit_tail_loglog(rec.region);
            rec.fit.ci_level = config.tail.ci_level;
            if (config.tail.n_boot > 0) {
                const auto band_seed = derive_seed(*config.seed, "bootstrap", 2 * tau + (side == Side::loss ? 1 : 0));
                rec.fit.band = ccdf_confidence_band(rec.region, rec.fit, config.tail.ci_level, config.tail.n_boot,
                                                    band_seed, {config.threads});
            }
            rec.ranks = u_test_ranks(rec.region, config.tail.max_rank);
            rec.fit.outliers = u_test_outliers(rec.region, config.tail.u_level, config.tail.max_rank,
                                               {config.tail.bonferroni});
            b.tails.push_back(std::move(rec));
        }
        b.samples.emplace(tau, std::move(sample));
    }

    b.scaling = scaling_table(b.curve, mtaus, config.binning, config.threads);
    for (auto& row : b.scaling.rows) {
        for (const auto& t : b.tails)
            if (t.tau == row.tau && std::abs(t.fit.slope) < 3.0) {
                row.warnings.push_back("tail-unstable third moment");
                break;
            }
    }

    if (config.model.enabled) {
        b.model_stage_run = true;
        for (auto tau : config.model.taus)
            for (auto family : config.model.families) {
                ModelFitRecord rec;
                rec.tau = tau;
                rec.family = family;
                rec.m2_slope = b.scaling.m2_fit.slope;
                try {
                    const auto sample = accumulated_returns(b.curve, tau, b.mu);
                    FitOptions opt;
                    opt.table_nodes = config.model.table_nodes;
                    rec.fit = fit_return_density(sample, family, opt);
                } catch (const std::exception& e) {
                    rec.error = e.what();
                }
                b.model_fits.push_back(std::move(rec));
            }
    }
    return b;
}

inline ReportBundle run_pipeline(const PipelineConfig& config)
{
    validate_config(config);
    if (config.input_path.empty()) throw Error(ErrorCode::config_invalid, "no input path configured");
    LoadResult loaded = [&] {
        try {
            return load_price_series(config.input_path, config.load);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::file_not_found)
                throw Error(ErrorCode::input_unreadable, e.what());
            throw;
        }
    }();
    return run_pipeline(config, loaded.series, loaded.report);
}

// ---------------------------------------------------------------------------
// Serialisation

namespace detail {

inline std::string num(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// JSON carries NaN/inf as null.
inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json fit_json(const numeric::LinearFit& f)
{
    return {{"slope", jnum(f.slope)},
            {"intercept", jnum(f.intercept)},
            {"slope_stderr", jnum(f.slope_stderr)},
            {"r_squared", jnum(f.r_squared)},
            {"n", f.n}};
}

} // namespace detail

inline json report_json(const ReportBundle& b)
{
    using detail::jnum;
    json j;
    j["label"] = b.label;
    j["rows"] = b.dates.size();
    j["first_date"] = b.dates.empty() ? "" : format_date(b.dates.front());
    j["last_date"] = b.dates.empty() ? "" : format_date(b.dates.back());
    json dropped = json::array();
    for (const auto& d : b.validation.dropped_rows) dropped.push_back({{"row", d.row_index}, {"reason", d.reason}});
    j["validation"] = {{"row_count", b.validation.row_count},
                       {"dropped_rows", dropped},
                       {"warnings", b.validation.warnings}};
    j["mu"] = jnum(b.mu);
    json trends = json::array();
    for (const auto& t : b.trends)
        trends.push_back({{"tau", t.tau},
                          {"slope", jnum(t.slope)},
                          {"intercept", jnum(t.intercept)},
                          {"residual_rms", jnum(t.residual_rms)}});
    j["trends"] = trends;
    json counts = json::array();
    for (const auto& c : b.counts)
        counts.push_back({{"tau", c.tau}, {"total", c.total}, {"losses", c.losses}, {"gains", c.gains},
                          {"zeros", c.zeros}});
    j["counts"] = counts;

    json moments = json::array();
    for (const auto& r : b.scaling.rows)
        moments.push_back({{"tau", r.tau},
                           {"n", r.n},
                           {"m1", jnum(r.m1)},
                           {"m2", jnum(r.m2)},
                           {"m3", jnum(r.m3)},
                           {"mode", jnum(r.mode)},
                           {"median", jnum(r.median)},
                           {"zeta", jnum(r.zeta)},
                           {"zeta1", jnum(r.zeta1)},
                           {"zeta2", jnum(r.zeta2)},
                           {"warnings", r.warnings}});
    j["moments"] = moments;
    j["scaling"] = {{"m1_fit", detail::fit_json(b.scaling.m1_fit)}, {"m2_fit", detail::fit_json(b.scaling.m2_fit)}};

    json tails = json::array();
    for (const auto& t : b.tails) {
        json outliers = json::array();
        for (const auto& o : t.fit.outliers)
            outliers.push_back({{"rank", o.rank}, {"x", jnum(o.x)}, {"class", to_string(o.kind)},
                                {"p_value", jnum(o.p_value)}});
        json ranks = json::array();
        for (const auto& r : t.ranks)
            ranks.push_back({{"rank", r.rank}, {"x", jnum(r.x)}, {"share", jnum(r.share)},
                             {"p_value", jnum(r.p_value)}, {"direction", to_string(r.direction)}});
        json band = json::array();
        for (const auto& p : t.fit.band.points)
            band.push_back({jnum(p.x), jnum(p.survival), jnum(p.survival_lo), jnum(p.survival_hi)});
        tails.push_back({{"tau", t.tau},
                         {"side", to_string(t.side)},
                         {"n", t.ccdf.n},
                         {"k", t.region.k},
                         {"threshold", jnum(t.region.threshold)},
                         {"slope", jnum(t.fit.slope)},
                         {"intercept", jnum(t.fit.intercept)},
                         {"slope_stderr", jnum(t.fit.slope_stderr)},
                         {"r_squared", jnum(t.fit.r_squared)},
                         {"ks_distance", jnum(t.fit.ks_distance)},
                         {"hill_exponent", jnum(t.fit.hill_exponent)},
                         {"ci_level", t.fit.ci_level},
                         {"band_coverage", t.fit.band.points.empty() ? json(nullptr) : jnum(t.fit.band.coverage())},
                         {"band", band},
                         {"u_test", ranks},
                         {"outliers", outliers}});
    }
    j["tails"] = tails;

    if (b.model_stage_run) {
        json fits = json::array();
        for (const auto& m : b.model_fits) {
            json f = {{"tau", m.tau}, {"family", to_string(m.family)}, {"m2_slope", jnum(m.m2_slope)}};
            if (m.fit) {
                const auto& r = *m.fit;
                f["theta"] = jnum(r.theta);
                if (m.family == DensityFamily::student_mm) {
                    f["alpha"] = jnum(r.alpha);
                } else {
                    f["p"] = jnum(r.p);
                    f["q"] = jnum(r.q);
                    f["beta"] = jnum(r.beta);
                }
                f["log_likelihood"] = jnum(r.log_likelihood);
                f["ks_distance"] = jnum(r.ks_distance);
                f["theta_start"] = jnum(r.theta_start);
                f["evaluations"] = r.evaluations;
            } else {
                f["error"] = m.error;
            }
            fits.push_back(f);
        }
        j["model_fits"] = fits;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Plot data

inline const std::vector<std::string>& figure_ids()
{
    static const std::vector<std::string> ids{"trend",       "mu-tau",      "timeseries", "counts",
                                              "ccdf-tails",  "pdf",         "m1-scaling", "m2-scaling",
                                              "mode-median", "skewness",    "model-density"};
    return ids;
}

namespace detail {

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns) : path_(path)
    {
        for (std::size_t i = 0; i < columns.size(); ++i) buf_ << (i ? "," : "") << columns[i];
        buf_ << '\n';
    }

    template <class... Cells>
    void row(const Cells&... cells)
    {
        bool first = true;
        ((buf_ << (first ? "" : ",") << cell(cells), first = false), ...);
        buf_ << '\n';
    }

    std::filesystem::path close()
    {
        std::ofstream out(path_, std::ios::binary);
        out << buf_.str();
        if (!out) throw Error(ErrorCode::input_unreadable, "cannot write " + path_.string());
        return path_;
    }

private:
    static std::string cell(double v) { return num(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }

    std::filesystem::path path_;
    std::ostringstream buf_;
};

inline std::string tau_tag(std::size_t tau) { return "tau" + std::to_string(tau); }

} // namespace detail

/// Writes the delimited files for one figure into `dir`; returns their paths.
inline std::vector<std::filesystem::path> emit_plot_data(const ReportBundle& b, const std::string& which,
                                                         const std::filesystem::path& dir)
{
    using detail::CsvWriter;
    using detail::tau_tag;
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    if (which == "trend") {
        CsvWriter w(dir / "trend.csv", {"t", "date", "r", "fit"});
        const double icpt = fit_trend(b.curve, 1).intercept;
        for (std::size_t t = 0; t < b.curve.size(); ++t)
            w.row(t, format_date(b.dates[t]), b.curve.r[t], icpt + b.mu * static_cast<double>(t));
        out.push_back(w.close());
    } else if (which == "mu-tau") {
        CsvWriter w(dir / "mu_tau.csv", {"tau", "mu", "intercept", "residual_rms"});
        for (const auto& t : b.trends) w.row(t.tau, t.slope, t.intercept, t.residual_rms);
        out.push_back(w.close());
    } else if (which == "timeseries") {
        for (const auto& [tau, s] : b.samples) {
            CsvWriter w(dir / ("timeseries_" + tau_tag(tau) + ".csv"), {"date", "dx"});
            for (std::size_t i = 0; i < s.size(); ++i) w.row(format_date(b.dates[s.start_indices[i]]), s.values[i]);
            out.push_back(w.close());
        }
    } else if (which == "counts") {
        CsvWriter w(dir / "counts.csv", {"tau", "total", "losses", "gains", "zeros"});
        for (const auto& c : b.counts) w.row(c.tau, c.total, c.losses, c.gains, c.zeros);
        out.push_back(w.close());
    } else if (which == "ccdf-tails") {
        for (const auto& t : b.tails) {
            CsvWriter w(dir / ("ccdf_" + tau_tag(t.tau) + "_" + to_string(t.side) + ".csv"),
                        {"x", "survival", "fit", "lo", "hi", "flag"});
            const std::size_t first_tail = t.ccdf.points.size() - t.region.points.size();
            for (std::size_t i = 0; i < t.ccdf.points.size(); ++i) {
                const auto& p = t.ccdf.points[i];
                double fit = nan, lo = nan, hi = nan;
                std::string flag = "none";
                if (i >= first_tail) {
                    const std::size_t j = i - first_tail;
                    fit = t.fit.survival_at(p.x);
                    if (!t.fit.band.points.empty()) {
                        lo = t.fit.band.points[j].survival_lo;
                        hi = t.fit.band.points[j].survival_hi;
                    }
                    for (const auto& o : t.fit.outliers)
                        if (o.x == p.x) flag = to_string(o.kind);
                }
                w.row(p.x, p.survival, fit, lo, hi, flag);
            }
            out.push_back(w.close());
        }
    } else if (which == "pdf") {
        for (const auto& [tau, pdf] : b.pdfs) {
            CsvWriter w(dir / ("pdf_" + tau_tag(tau) + ".csv"), {"bin_lo", "bin_hi", "density"});
            for (std::size_t i = 0; i < pdf.bins(); ++i) w.row(pdf.bin_edges[i], pdf.bin_edges[i + 1], pdf.densities[i]);
            out.push_back(w.close());
        }
    } else if (which == "m1-scaling" || which == "m2-scaling") {
        const bool first = which == "m1-scaling";
        const char* m = first ? "m1" : "m2";
        CsvWriter w(dir / (std::string(m) + "_scaling.csv"), {"tau", m, std::string(m) + "_over_tau", "fit"});
        const auto& fit = first ? b.scaling.m1_fit : b.scaling.m2_fit;
        for (std::size_t i = 0; i < b.scaling.rows.size(); ++i) {
            const auto& r = b.scaling.rows[i];
            const double tau = static_cast<double>(r.tau);
            w.row(r.tau, first ? r.m1 : r.m2, first ? b.scaling.m1_over_tau[i] : b.scaling.m2_over_tau[i],
                  fit.n ? fit(tau) : nan);
        }
        out.push_back(w.close());
    } else if (which == "mode-median") {
        CsvWriter w(dir / "mode_median.csv", {"tau", "mode", "median", "m1"});
        for (const auto& r : b.scaling.rows) w.row(r.tau, r.mode, r.median, r.m1);
        out.push_back(w.close());
    } else if (which == "skewness") {
        CsvWriter w(dir / "skewness.csv", {"tau", "zeta", "zeta1", "zeta2"});
        for (const auto& r : b.scaling.rows) w.row(r.tau, r.zeta, r.zeta1, r.zeta2);
        out.push_back(w.close());
    } else if (which == "model-density") {
        if (!b.model_stage_run) throw Error(ErrorCode::stage_not_run, "model-density needs the model stage");
        for (const auto& m : b.model_fits) {
            if (!m.fit) continue;
            const double tau = static_cast<double>(m.tau);
            const ReturnDensity d(m.family, m.fit->params, tau);
            const double zmax = 8.0 * d.scale();
            const std::size_t n = b.config.model.grid_points;
            CsvWriter w(dir / ("model_density_" + tau_tag(m.tau) + "_" + to_string(m.family) + ".csv"),
                        {"z", "density"});
            for (std::size_t i = 0; i < n; ++i) {
                const double z = -zmax + 2.0 * zmax * static_cast<double>(i) / static_cast<double>(n - 1);
                w.row(z, d(z));
            }
            out.push_back(w.close());
        }
    } else {
        throw Error(ErrorCode::config_invalid, "unknown figure id '" + which + "'");
    }
    return out;
}

/// One file per tau with columns (start_index, value).
inline std::vector<std::filesystem::path> emit_returns(const ReportBundle& b, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    for (const auto& [tau, s] : b.samples) {
        detail::CsvWriter w(dir / ("returns_" + detail::tau_tag(tau) + ".csv"), {"start_index", "value"});
        for (std::size_t i = 0; i < s.size(); ++i) w.row(s.start_indices[i], s.values[i]);
        out.push_back(w.close());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest

inline std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::invalid_argument, "sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::input_unreadable, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text)
{
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorCode::input_unreadable, "cannot write " + p.string());
}

/// manifest.json: config echo plus SHA-256 of every listed file, paths
/// relative to `dir` and sorted.
inline std::filesystem::path write_manifest(const std::filesystem::path& dir, const json& config_echo,
                                            std::vector<std::filesystem::path> files)
{
    std::vector<std::pair<std::string, std::filesystem::path>> rel;
    for (const auto& f : files) rel.emplace_back(std::filesystem::relative(f, dir).generic_string(), f);
    std::sort(rel.begin(), rel.end());
    rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
    json entries = json::array();
    for (const auto& [name, path] : rel) {
        const auto bytes = read_file(path);
        entries.push_back({{"path", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    json m;
    m["tool"] = "asymret";
    m["config"] = config_echo;
    m["files"] = entries;
    const auto path = dir / "manifest.json";
    write_text(path, m.dump(2) + "\n");
    return path;
}

/// Writes report.json, the requested figures and the manifest.
inline std::vector<std::filesystem::path> write_bundle(const ReportBundle& b, const std::filesystem::path& dir,
                                                       const std::vector<std::string>& figures)
{
    std::vector<std::filesystem::path> files;
    const auto report = dir / "report.json";
    write_text(report, report_json(b).dump(2) + "\n");
    files.push_back(report);
    for (const auto& fig : figures) {
        auto f = emit_plot_data(b, fig, dir / "plots");
        files.insert(files.end(), f.begin(), f.end());
    }
    if (!b.config.emit_returns_dir.empty()) {
        std::filesystem::path rdir = b.config.emit_returns_dir;
        if (rdir.is_relative()) rdir = dir / rdir;
        auto f = emit_returns(b, rdir);
        files.insert(files.end(), f.begin(), f.end());
    }
    files.push_back(write_manifest(dir, config_to_json(b.config), files));
    return files;
}

// ---------------------------------------------------------------------------
// Simulation stage

struct SimulationBundle {
    SimulationConfig config;
    std::uint64_t seed = 0;
    VariancePath path;
    ReturnSample returns; // daily
    ScalingTable scaling; // moments of tau-aggregated simulated returns
};

inline SimulationBundle run_simulation(const PipelineConfig& config)
{
    if (!config.seed) throw Error(ErrorCode::config_invalid, "simulation requires a seed");
    const auto& s = config.simulation;
    SimulationBundle b;
    b.config = s;
    b.seed = derive_seed(*config.seed, "simulation");
    const auto steps_per_day = static_cast<std::size_t>(std::llround(1.0 / s.dt));
    b.path = simulate_variance(s.params, s.model, s.dt, s.days * steps_per_day, s.v0.value_or(s.params.theta),
                               derive_seed(b.seed, "variance"), steps_per_day);
    b.returns = simulate_returns(b.path, s.drift, derive_seed(b.seed, "returns"), {s.drift_offset});
    // moments of the raw accumulated returns: no de-trending of simulated data
    const auto curve = curve_from_increments(b.returns.values);
    b.scaling.rows.resize(s.taus.size());
    parallel_for(s.taus.size(), config.threads, [&](std::size_t i) {
        const auto acc = accumulated_returns(curve, s.taus[i], 0.0);
        b.scaling.rows[i] = moments_report(acc.values, s.taus[i], config.binning);
    });
    for (const auto& r : b.scaling.rows) {
        b.scaling.m1_over_tau.push_back(r.m1 / static_cast<double>(r.tau));
        b.scaling.m2_over_tau.push_back(r.m2 / static_cast<double>(r.tau));
    }
    return b;
}

inline std::vector<std::filesystem::path> write_simulation(const SimulationBundle& b, const PipelineConfig& config,
                                                           const std::filesystem::path& dir)
{
    using detail::jnum;
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    {
        detail::CsvWriter w(dir / "variance.csv", {"day", "v"});
        for (std::size_t i = 0; i < b.path.values.size(); ++i) w.row(i, b.path.values[i]);
        files.push_back(w.close());
    }
    {
        detail::CsvWriter w(dir / "returns.csv", {"day", "dx"});
        for (std::size_t i = 0; i < b.returns.size(); ++i) w.row(i, b.returns.values[i]);
        files.push_back(w.close());
    }
    json rows = json::array();
    for (std::size_t i = 0; i < b.scaling.rows.size(); ++i) {
        const auto& r = b.scaling.rows[i];
        rows.push_back({{"tau", r.tau}, {"m1", jnum(r.m1)}, {"m2", jnum(r.m2)}, {"m2_over_tau", jnum(b.scaling.m2_over_tau[i])},
                        {"zeta", jnum(r.zeta)}});
    }
    double vmean = 0.0;
    for (double v : b.path.values) vmean += v;
    vmean /= static_cast<double>(b.path.values.size());
    json j = {{"model", to_string(b.config.model)},
              {"alpha", b.config.params.kappa_m > 0 ? jnum(b.config.params.alpha()) : json(nullptr)},
              {"mean_variance", jnum(vmean)},
              {"clamp_events", b.path.clamp_events},
              {"moments", rows}};
    const auto report = dir / "simulation.json";
    write_text(report, j.dump(2) + "\n");
    files.push_back(report);
    files.push_back(write_manifest(dir, config_to_json(config), files));
    return files;
}

} // namespace asymret
