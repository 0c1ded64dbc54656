// Command-line front end: one subcommand per canned scenario plus a generic
// `run --config <file>` that accepts any config or provenance sidecar.
//
// Exit codes: 0 success, 2 config/usage error, 3 I/O error, 4 numeric
// failure (fit or quadrature), 5 internal error.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tmzi/tmzi.hpp"

namespace {

struct RunFlags {
    std::string engine = "both";
    std::string qrng_mode;
    std::string format;
    std::string out_dir;
    std::string config_path;
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    int threads = 0;
    int phase_points = 0;
    bool emit_records = false;
    bool nominal_xi = false;
};

struct SubCommand {
    CLI::App* cmd = nullptr;
    bool is_run = false;
    tmzi::ScenarioName name = tmzi::ScenarioName::Fig2;
    RunFlags flags;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* trials_opt = nullptr;
};

void add_common_options(SubCommand& sub) {
    CLI::App* cmd = sub.cmd;
    RunFlags& f = sub.flags;
    cmd->add_option("--engine", f.engine, "analytic, montecarlo or both")
        ->check(CLI::IsMember({"analytic", "montecarlo", "both"}));
    cmd->add_option("--qrng-mode", f.qrng_mode, "override the QRNG mode (amplitude or ensemble)")
        ->check(CLI::IsMember({"amplitude", "ensemble"}));
    cmd->add_option("--format", f.format, "data file format (tsv or csv)")
        ->check(CLI::IsMember({"tsv", "csv"}));
    cmd->add_option("--out", f.out_dir, "output directory (default out/<scenario>)");
    sub.seed_opt = cmd->add_option("--seed", f.seed, "master seed for Monte Carlo series");
    sub.trials_opt = cmd->add_option("--trials", f.trials, "Monte Carlo trials per sweep point");
    cmd->add_option("--threads", f.threads, "worker threads (0 = hardware)");
    cmd->add_option("--phase-points", f.phase_points, "points on the one-period phase grid");
    cmd->add_flag("--emit-records", f.emit_records, "also write per-trial record streams");
}

void apply_flags(tmzi::ScenarioSpec& spec, const SubCommand& sub) {
    const RunFlags& f = sub.flags;
    spec.engine = tmzi::engine_from_string(f.engine);
    if (!f.qrng_mode.empty())
        spec.config.qrng.mode = tmzi::qrng_mode_from_string(f.qrng_mode, "--qrng-mode");
    if (!f.format.empty())
        spec.format = f.format == "csv" ? tmzi::TableFormat::Csv : tmzi::TableFormat::Tsv;
    if (sub.seed_opt && sub.seed_opt->count() > 0)
        spec.seed = f.seed;
    if (sub.trials_opt && sub.trials_opt->count() > 0)
        spec.trials_per_point = f.trials;
    if (f.threads > 0)
        spec.threads = f.threads;
    if (f.phase_points > 0)
        spec.phase_points = f.phase_points;
    spec.emit_records = f.emit_records;
    if (f.nominal_xi)
        spec.sweep_values = {0.0, 0.25, 0.5, 0.75, 1.0};
}

int dispatch(const SubCommand& sub) {
    tmzi::ScenarioSpec spec;
    if (sub.is_run)
        spec = tmzi::spec_from_bundle(tmzi::load_config_file(sub.flags.config_path));
    else
        spec = tmzi::default_scenario(sub.name);
    apply_flags(spec, sub);

    const std::string out_dir =
        sub.flags.out_dir.empty() ? std::string("out/") + tmzi::to_string(spec.name)
                                  : sub.flags.out_dir;
    const tmzi::ScenarioResult result = tmzi::run_scenario(spec);
    const auto written = tmzi::emit(result, out_dir);
    std::printf("%s: %zu series, %zu files\n", tmzi::to_string(spec.name), result.series.size(),
                written.size());
    for (const auto& path : written)
        std::printf("  %s\n", path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale simulator of a two-memory temporal interferometer"};
    app.require_subcommand(1);

    std::vector<std::unique_ptr<SubCommand>> subs;
    const struct {
        tmzi::ScenarioName name;
        const char* help;
    } scenarios[] = {
        {tmzi::ScenarioName::Fig1d, "closed versus open interferometer fringes"},
        {tmzi::ScenarioName::Fig2, "fringes across the QRNG weight sweep"},
        {tmzi::ScenarioName::Fig3, "fringes across the second-memory efficiency sweep"},
        {tmzi::ScenarioName::Fig4, "visibility versus second storage time"},
        {tmzi::ScenarioName::Fig5a, "detection-time histograms at both fringe extremes"},
        {tmzi::ScenarioName::Fig5b, "counts versus matched storage time (coherence decay)"},
        {tmzi::ScenarioName::Fig5c, "visibility versus programmed optical depth"},
    };
    for (const auto& sc : scenarios) {
        auto sub = std::make_unique<SubCommand>();
        sub->name = sc.name;
        sub->cmd = app.add_subcommand(tmzi::to_string(sc.name), sc.help);
        add_common_options(*sub);
        if (sc.name == tmzi::ScenarioName::Fig2)
            sub->cmd->add_flag("--nominal-xi", sub->flags.nominal_xi,
                               "sweep the nominal weights 0, 0.25, 0.5, 0.75, 1");
        subs.push_back(std::move(sub));
    }
    {
        auto sub = std::make_unique<SubCommand>();
        sub->is_run = true;
        sub->cmd = app.add_subcommand("run", "run a scenario described by a config file");
        sub->cmd->add_option("--config", sub->flags.config_path, "config or provenance file")
            ->required();
        add_common_options(*sub);
        subs.push_back(std::move(sub));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        for (const auto& sub : subs)
            if (sub->cmd->parsed())
                return dispatch(*sub);
        std::fprintf(stderr, "error: usage: no subcommand selected\n");
        return 2;
    } catch (const tmzi::ConfigError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const tmzi::ScenarioError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const tmzi::IoError& e) {
        std::fprintf(stderr, "error: io: %s\n", e.what());
        return 3;
    } catch (const tmzi::FitError& e) {
        std::fprintf(stderr, "error: numeric: %s\n", e.what());
        return 4;
    } catch (const tmzi::QuadratureError& e) {
        std::fprintf(stderr, "error: numeric: %s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 5;
    }
}
