// asymret: analyze | simulate | fit | emit
// Exit codes: 0 ok, 2 configuration error, 3 data error.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asymret/pipeline.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::string input;
    std::string date_col;
    std::string price_col;
    bool strict = false;
    std::string taus;
    std::string emit_returns;
    std::string out;
    int threads = -1;
    long long seed = -1;
};

std::vector<std::size_t> parse_taus(const std::string& text)
{
    std::vector<std::size_t> taus;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long v = std::stol(item, &used);
            if (used != item.size() || v < 1) throw std::invalid_argument(item);
            taus.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw asymret::Error(asymret::ErrorCode::config_invalid, "bad --tau entry '" + item + "'");
        }
    }
    if (taus.empty()) throw asymret::Error(asymret::ErrorCode::config_invalid, "--tau is empty");
    return taus;
}

asymret::PipelineConfig build_config(const Overrides& o)
{
    asymret::PipelineConfig c;
    if (!o.config_path.empty()) c = asymret::load_config(o.config_path);
    if (!o.input.empty()) c.input_path = o.input;
    if (!o.date_col.empty()) c.load.date_col = o.date_col;
    if (!o.price_col.empty()) c.load.price_col = o.price_col;
    if (o.strict) c.load.strict = true;
    if (!o.taus.empty()) c.taus = parse_taus(o.taus);
    if (!o.emit_returns.empty()) c.emit_returns_dir = o.emit_returns;
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.threads >= 0) c.threads = static_cast<unsigned>(o.threads);
    if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
    return c;
}

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores); never changes results");
    cmd->add_option("--seed", o.seed, "root seed")->check(CLI::NonNegativeNumber);
}

void add_input(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--input", o.input, "price file (delimited, with header)");
    cmd->add_option("--date-col", o.date_col, "date column name or 0-based index");
    cmd->add_option("--price-col", o.price_col, "price column name or 0-based index");
    cmd->add_flag("--strict", o.strict, "fail on malformed rows instead of dropping them");
    cmd->add_option("--tau", o.taus, "comma-separated windows, e.g. 1,5,10,20");
    cmd->add_option("--emit-returns", o.emit_returns, "write per-tau (start_index, value) files here");
}

void print_summary(const asymret::ReportBundle& b)
{
    std::printf("%s: %zu prices, mu = %.6g/day\n", b.label.c_str(), b.dates.size(), b.mu);
    for (const auto& c : b.counts)
        std::printf("tau %-4zu total %-6zu losses %-6zu gains %zu\n", c.tau, c.total, c.losses, c.gains);
    for (const auto& t : b.tails)
        std::printf("tau %-4zu %-4s slope %.3f +- %.3f (k=%zu, %zu outlier(s))\n", t.tau, asymret::to_string(t.side),
                    t.fit.slope, t.fit.slope_stderr, t.region.k, t.fit.outliers.size());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Asymmetry of accumulated returns: tails, moments and stochastic-variance models"};
    app.require_subcommand(1);
    Overrides o;
    std::vector<std::string> figures;

    auto* analyze = app.add_subcommand("analyze", "empirical pipeline: counts, moments, tails, plot data");
    add_common(analyze, o);
    add_input(analyze, o);

    auto* simulate = app.add_subcommand("simulate", "simulate variance paths and returns");
    add_common(simulate, o);

    auto* fit = app.add_subcommand("fit", "empirical pipeline plus return-density fits");
    add_common(fit, o);
    add_input(fit, o);

    auto* emit = app.add_subcommand("emit", "write plot data for selected figures");
    add_common(emit, o);
    add_input(emit, o);
    emit->add_option("--figure", figures, "figure id (repeatable); default: all available")
        ->check(CLI::IsMember(asymret::figure_ids()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        auto cfg = build_config(o);
        const std::filesystem::path out = cfg.output_dir;
        if (simulate->parsed()) {
            const auto sim = asymret::run_simulation(cfg);
            asymret::write_simulation(sim, cfg, out);
            std::printf("simulated %zu days (%s), clamp events %zu\n", sim.returns.size(),
                        asymret::to_string(sim.config.model), sim.path.clamp_events);
            for (std::size_t i = 0; i < sim.scaling.rows.size(); ++i)
                std::printf("tau %-4zu m2/tau %.6g\n", sim.scaling.rows[i].tau, sim.scaling.m2_over_tau[i]);
            return 0;
        }
        if (fit->parsed()) cfg.model.enabled = true;
        const auto bundle = asymret::run_pipeline(cfg);
        std::vector<std::string> figs;
        if (emit->parsed() && !figures.empty()) {
            figs = figures;
        } else {
            for (const auto& id : asymret::figure_ids())
                if (id != "model-density" || bundle.model_stage_run) figs.push_back(id);
        }
        asymret::write_bundle(bundle, out, figs);
        print_summary(bundle);
        for (const auto& m : bundle.model_fits) {
            if (m.fit)
                std::printf("fit tau %zu %s: theta %.4g, loglik %.6g, KS %.4f\n", m.tau, asymret::to_string(m.family),
                            m.fit->theta, m.fit->log_likelihood, m.fit->ks_distance);
            else
                std::printf("fit tau %zu %s failed: %s\n", m.tau, asymret::to_string(m.family), m.error.c_str());
        }
        return 0;
    } catch (const asymret::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return asymret::is_config_error(e.code()) ? 2 : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
