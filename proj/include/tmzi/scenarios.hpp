#pragma once

// Canned figure-regeneration scenarios: default configurations, sweep
// handling, dispatch to the analytic and Monte Carlo engines, and emission
// of the resulting data files plus a provenance sidecar that replays the
// run byte for byte.

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "io.hpp"

namespace tmzi {

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The seven canned outputs. Fig1d contrasts the closed and open
/// interferometer; Fig2 sweeps the QRNG weight; Fig3 sweeps the second
/// memory's efficiency; Fig4 sweeps its storage time through the overlap
/// window; Fig5a resolves detection times; Fig5b scans matched storage
/// times against the memory coherence decays; Fig5c maps programmed
/// optical depth to visibility.
enum class ScenarioName { Fig1d, Fig2, Fig3, Fig4, Fig5a, Fig5b, Fig5c };

enum class Engine { Analytic, MonteCarlo, Both };

inline const char* to_string(ScenarioName n) {
    switch (n) {
    case ScenarioName::Fig1d: return "fig1d";
    case ScenarioName::Fig2: return "fig2";
    case ScenarioName::Fig3: return "fig3";
    case ScenarioName::Fig4: return "fig4";
    case ScenarioName::Fig5a: return "fig5a";
    case ScenarioName::Fig5b: return "fig5b";
    case ScenarioName::Fig5c: return "fig5c";
    }
    return "?";
}

inline const char* to_string(Engine e) {
    switch (e) {
    case Engine::Analytic: return "analytic";
    case Engine::MonteCarlo: return "montecarlo";
    case Engine::Both: return "both";
    }
    return "?";
}

inline ScenarioName scenario_name_from_string(const std::string& s) {
    for (ScenarioName n : {ScenarioName::Fig1d, ScenarioName::Fig2, ScenarioName::Fig3,
                           ScenarioName::Fig4, ScenarioName::Fig5a, ScenarioName::Fig5b,
                           ScenarioName::Fig5c})
        if (s == to_string(n))
            return n;
    throw ScenarioError("unknown scenario '" + s +
                        "' (expected fig1d, fig2, fig3, fig4, fig5a, fig5b or fig5c)");
}

inline Engine engine_from_string(const std::string& s) {
    for (Engine e : {Engine::Analytic, Engine::MonteCarlo, Engine::Both})
        if (s == to_string(e))
            return e;
    throw ScenarioError("unknown engine '" + s + "' (expected analytic, montecarlo or both)");
}

/// A fully resolved scenario run. The sweep applies on top of the base
/// config; Monte Carlo settings are ignored by purely analytic runs.
struct ScenarioSpec {
    ScenarioName name = ScenarioName::Fig2;
    Engine engine = Engine::Both;
    TableFormat format = TableFormat::Tsv;
    InterferometerConfig config{};
    SourceModel source{};
    OdCalibration od_calibration{};
    TimingSequence timing{};
    std::string sweep_parameter;
    std::vector<double> sweep_values;
    std::uint64_t seed = 0;
    std::uint64_t trials_per_point = 20000;
    double total_counts = 1.0;
    int phase_points = 9; // inclusive grid over one full period
    int threads = 0;
    int histogram_bins = 50;
    bool emit_records = false;
};

inline std::vector<double> scenario_phase_grid(int points) {
    if (points < 4)
        throw ScenarioError("phase grid needs at least 4 points for the fringe fit");
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = 2.0 * M_PI * i / (points - 1);
    return grid;
}

/// Applies one sweep step. "mbs2.eta_total" distributes the product over
/// eta_stored at fixed eta_con (only the product enters any prediction);
/// "od" goes through the optical-depth calibration first;
/// "storage_time_ns" moves both memories together.
inline InterferometerConfig apply_sweep(InterferometerConfig c, const std::string& param,
                                        double value, const OdCalibration& calib) {
    if (param == "qrng.xi") {
        c.qrng.xi = value;
    } else if (param == "mbs2.eta_total" || param == "od") {
        const double eta = param == "od" ? od_to_efficiency(value, calib) : value;
        if (c.mbs2.eta_con > 0.0) {
            c.mbs2.eta_stored = eta / c.mbs2.eta_con;
        } else if (eta == 0.0) {
            c.mbs2.eta_stored = 0.0;
        } else {
            throw ScenarioError("sweep " + param + ": eta_con is zero, cannot reach " +
                                format_double(eta));
        }
    } else if (param == "mbs2.storage_time_ns") {
        c.mbs2.storage_time_ns = value;
    } else if (param == "mbs1.storage_time_ns") {
        c.mbs1.storage_time_ns = value;
    } else if (param == "storage_time_ns") {
        c.mbs1.storage_time_ns = value;
        c.mbs2.storage_time_ns = value;
    } else if (param == "eom_phase_rad") {
        c.eom_phase_rad = value;
    } else if (param == "fiber_delay_ns") {
        c.fiber_delay_ns = value;
    } else if (param == "mbs1.eta_con") {
        c.mbs1.eta_con = value;
    } else if (param == "mbs1.eta_stored") {
        c.mbs1.eta_stored = value;
    } else if (param == "mbs2.eta_con") {
        c.mbs2.eta_con = value;
    } else if (param == "mbs2.eta_stored") {
        c.mbs2.eta_stored = value;
    } else {
        throw ScenarioError("unknown sweep parameter '" + param + "'");
    }
    validated(c);
    return c;
}

/// Caption-accurate defaults for each scenario. The common base is the
/// QRNG-sweep configuration (total first-memory efficiency 0.133 at
/// conversion 0.85, second memory 0.24, fringe normalization 611); other
/// scenarios override what their figure changes.
inline ScenarioSpec default_scenario(ScenarioName name, Engine engine = Engine::Both) {
    ScenarioSpec spec;
    spec.name = name;
    spec.engine = engine;

    InterferometerConfig& c = spec.config;
    c.mbs1.eta_con = 0.85;
    c.mbs1.eta_stored = 0.133 / 0.85;
    c.mbs1.storage_time_ns = 200.0;
    c.mbs1.retrieved_packet = {PacketShape::ExponentialDecay, 0.0, 10.0};
    c.mbs2.eta_con = 0.6;
    c.mbs2.eta_stored = 0.4;
    c.mbs2.storage_time_ns = 200.0;
    c.mbs2.retrieved_packet = {PacketShape::ExponentialDecay, 0.0, 10.0};
    c.fiber_delay_ns = 1000.0;
    c.detector = {0.6, 25.0, 500.0};
    spec.source.herald_probability = 0.3;
    spec.total_counts = 611.0;

    switch (name) {
    case ScenarioName::Fig1d:
        spec.sweep_parameter = "qrng.xi";
        spec.sweep_values = {1.0, 0.0};
        break;
    case ScenarioName::Fig2:
        spec.sweep_parameter = "qrng.xi";
        spec.sweep_values = {0.01, 0.24, 0.53, 0.74, 0.96}; // fitted weights
        break;
    case ScenarioName::Fig3:
        c.mbs1.eta_stored = 0.122 / 0.85;
        c.mbs2.eta_stored = 0.331 / 0.6;
        spec.total_counts = 568.0;
        spec.sweep_parameter = "mbs2.eta_total";
        spec.sweep_values = {0.331, 0.259, 0.114, 0.015, 0.0};
        break;
    case ScenarioName::Fig4:
        // asymmetric retrieved packets give the overlap window its shape
        c.mbs1.retrieved_packet.width_ns = 12.0;
        c.mbs2.retrieved_packet.width_ns = 8.0;
        spec.sweep_parameter = "mbs2.storage_time_ns";
        spec.sweep_values = {160.0, 180.0, 200.0, 220.0, 240.0, 260.0, 280.0};
        break;
    case ScenarioName::Fig5a:
        c.mbs1.retrieved_packet.width_ns = 12.0;
        c.mbs2.retrieved_packet.width_ns = 8.0;
        spec.sweep_parameter = "eom_phase_rad";
        spec.sweep_values = {0.0, M_PI};
        spec.trials_per_point = 200000;
        break;
    case ScenarioName::Fig5b:
        c.mbs1.coherence_time_t1_ns = 420.0;
        c.mbs2.coherence_time_t1_ns = 893.0;
        spec.sweep_parameter = "storage_time_ns";
        spec.sweep_values = {0.0,   100.0, 200.0, 300.0, 400.0, 500.0,
                             600.0, 700.0, 800.0, 900.0, 1000.0, 1100.0};
        spec.trials_per_point = 100000;
        break;
    case ScenarioName::Fig5c:
        c.mbs1.eta_con = 0.88;
        c.mbs1.eta_stored = 0.15;
        spec.sweep_parameter = "od";
        spec.sweep_values = {0.0,  2.0,  4.0,  6.0,  8.0,  10.0, 12.0, 14.0, 16.0, 18.0, 20.0,
                             22.0, 24.0, 26.0, 28.0, 30.0, 32.0, 34.0, 36.0, 38.0, 40.0};
        break;
    }
    return spec;
}

struct SeriesResult {
    std::string id;
    Table table;
    std::vector<TrialRecord> records; // only when the spec asked for them
};

struct ScenarioResult {
    ScenarioSpec spec;
    std::vector<SeriesResult> series;
};

namespace detail {

inline std::uint64_t series_seed(std::uint64_t master, std::uint64_t ordinal) {
    return mix64(master ^ (0x5851F42D4C957F2DULL + ordinal));
}

inline bool runs_analytic(Engine e) { return e != Engine::MonteCarlo; }
inline bool runs_montecarlo(Engine e) { return e != Engine::Analytic; }

inline std::string sweep_label(const std::string& param, double value) {
    if (param == "qrng.xi")
        return "xi" + format_double(value);
    if (param == "mbs2.eta_total")
        return "eta2_" + format_double(value);
    if (param == "od")
        return "od" + format_double(value);
    std::string p = param;
    for (char& ch : p)
        if (ch == '.')
            ch = '_';
    return p + "_" + format_double(value);
}

inline std::vector<std::string> series_header(const ScenarioSpec& spec, const std::string& id,
                                              const char* engine) {
    std::vector<std::string> c;
    c.push_back(std::string("scenario = ") + to_string(spec.name));
    c.push_back("series = " + id);
    c.push_back(std::string("engine = ") + engine);
    return c;
}

inline void append_sinusoid_stats(std::vector<std::string>& comments, const FringeScan& scan) {
    try {
        const VisibilityEstimate est = visibility_from_fringe(scan);
        comments.push_back("fit_amplitude = " + format_double(est.fit.amplitude));
        comments.push_back("fit_amplitude_stderr = " + format_double(est.fit.std_errors[0]));
        comments.push_back("fit_phase0_rad = " + format_double(est.fit.phase0_rad));
        comments.push_back("fit_phase0_stderr = " + format_double(est.fit.std_errors[1]));
        comments.push_back("fit_offset = " + format_double(est.fit.offset));
        comments.push_back("fit_offset_stderr = " + format_double(est.fit.std_errors[2]));
        comments.push_back("fit_visibility = " + format_double(est.value));
        comments.push_back(std::string("fit_visibility_clamped = ") + (est.clamped ? "1" : "0"));
    } catch (const FitError& e) {
        comments.push_back(std::string("fit_error = ") + e.what());
    }
}

inline void append_decay_stats(std::vector<std::string>& comments,
                               const std::vector<std::pair<double, double>>& points) {
    try {
        const DecayFit fit = fit_exponential_decay(points);
        comments.push_back("fit_amplitude = " + format_double(fit.amplitude));
        comments.push_back("fit_decay_time_ns = " + format_double(fit.decay_time_ns));
        comments.push_back("fit_decay_time_stderr_ns = " + format_double(fit.std_errors[1]));
        comments.push_back("fit_background = " + format_double(fit.background));
    } catch (const FitError& e) {
        comments.push_back(std::string("fit_error = ") + e.what());
    }
}

inline SeriesResult analytic_fringe_series(const ScenarioSpec& spec,
                                           const InterferometerConfig& cfg,
                                           const std::string& id,
                                           const std::string& sweep_note) {
    const auto grid = scenario_phase_grid(spec.phase_points);
    const std::complex<double> zeta = mode_overlap(cfg);
    FringeScan scan;
    scan.total_n = spec.total_counts;
    scan.phases = grid;
    for (double phi : grid)
        scan.values.push_back(spec.total_counts * detection_probability(cfg, phi, zeta));

    SeriesResult s;
    s.id = id + "_analytic";
    s.table.comments = series_header(spec, id, "analytic");
    s.table.comments.push_back(sweep_note);
    s.table.comments.push_back("total_n = " + format_double(spec.total_counts));
    s.table.comments.push_back("zeta_abs = " + format_double(std::abs(zeta)));
    s.table.comments.push_back("visibility_analytic = " +
                               format_double(visibility_analytic(cfg, zeta)));
    append_sinusoid_stats(s.table.comments, scan);
    s.table.columns = {"phase_rad", "expected_counts"};
    for (std::size_t i = 0; i < grid.size(); ++i)
        s.table.rows.push_back({grid[i], scan.values[i]});
    return s;
}

inline SeriesResult mc_fringe_series(const ScenarioSpec& spec, const InterferometerConfig& cfg,
                                     const std::string& id, const std::string& sweep_note,
                                     std::uint64_t seed) {
    const auto grid = scenario_phase_grid(spec.phase_points);
    ExperimentOptions opt;
    opt.threads = spec.threads;
    opt.histogram_bins = spec.histogram_bins;
    opt.keep_records = spec.emit_records;
    ExperimentResult res =
        run_experiment(cfg, spec.source, grid, spec.trials_per_point, seed, opt);

    SeriesResult s;
    s.id = id + "_montecarlo";
    s.table.comments = series_header(spec, id, "montecarlo");
    s.table.comments.push_back(sweep_note);
    s.table.comments.push_back("trials_per_point = " + std::to_string(spec.trials_per_point));
    s.table.comments.push_back("seed = " + std::to_string(seed));
    append_sinusoid_stats(s.table.comments, res.counts);
    s.table.columns = {"phase_rad", "counts"};
    for (std::size_t i = 0; i < grid.size(); ++i)
        s.table.rows.push_back({grid[i], res.counts.values[i]});
    s.records = std::move(res.records);
    return s;
}

/// Expected detection-time histogram matching the Monte Carlo sampler: the
/// signal contribution follows the interfered intensity of the two
/// retrieved packets, darks are uniform over the gate. The (sub-1e-4)
/// correction from two candidates falling in one gate is ignored here.
inline SeriesResult analytic_histogram_series(const ScenarioSpec& spec,
                                              const InterferometerConfig& cfg,
                                              const std::string& id,
                                              const std::string& sweep_note) {
    const TrialLaw law = make_trial_law(cfg, spec.source, cfg.eom_phase_rad);
    const auto intensity = [&](double t) {
        const double f1 = envelope(law.packet1, t - law.tau1_ns);
        const double f2 = envelope(law.packet2, t - law.tau2_ns);
        return std::norm(law.a1 * f1 + law.a2 * f2);
    };
    const std::vector<double> kinks = {law.tau1_ns + law.packet1.center_ns,
                                       law.tau2_ns + law.packet2.center_ns};
    const PacketSupport s1 = support(law.packet1);
    const PacketSupport s2 = support(law.packet2);
    const double lo = std::min(s1.lo_ns + law.tau1_ns, s2.lo_ns + law.tau2_ns);
    const double hi = std::max(s1.hi_ns + law.tau1_ns, s2.hi_ns + law.tau2_ns);
    const double total_intensity = integrate_adaptive(intensity, lo, hi, 1e-10, kinks);

    const double n = static_cast<double>(spec.trials_per_point);
    const double p_signal = law.herald_probability * law.p_signal_in;
    const int bins = spec.histogram_bins;
    const double bin_w = law.gate_ns / bins;

    SeriesResult s;
    s.id = id + "_analytic";
    s.table.comments = series_header(spec, id, "analytic");
    s.table.comments.push_back(sweep_note);
    s.table.comments.push_back("trials_per_point = " + std::to_string(spec.trials_per_point));
    s.table.comments.push_back("expected_signal_counts = " + format_double(n * p_signal));
    s.table.comments.push_back("expected_dark_counts = " + format_double(n * law.p_dark));
    s.table.columns = {"time_ns", "expected_counts"};
    for (int b = 0; b < bins; ++b) {
        const double a = law.gate_start_ns + b * bin_w;
        const double z = a + bin_w;
        double frac = 0.0;
        if (total_intensity > 0.0)
            frac = integrate_adaptive(intensity, std::max(a, lo), std::min(z, hi), 1e-10, kinks) /
                   total_intensity;
        const double expected = n * (p_signal * frac + law.p_dark * bin_w / law.gate_ns);
        s.table.rows.push_back({(b + 0.5) * bin_w, expected});
    }
    return s;
}

inline SeriesResult mc_histogram_series(const ScenarioSpec& spec, const InterferometerConfig& cfg,
                                        const std::string& id, const std::string& sweep_note,
                                        std::uint64_t seed) {
    ExperimentOptions opt;
    opt.threads = spec.threads;
    opt.histogram_bins = spec.histogram_bins;
    opt.keep_records = spec.emit_records;
    ExperimentResult res = run_experiment(cfg, spec.source, {cfg.eom_phase_rad},
                                          spec.trials_per_point, seed, opt);
    SeriesResult s;
    s.id = id + "_montecarlo";
    s.table.comments = series_header(spec, id, "montecarlo");
    s.table.comments.push_back(sweep_note);
    s.table.comments.push_back("trials_per_point = " + std::to_string(spec.trials_per_point));
    s.table.comments.push_back("seed = " + std::to_string(seed));
    s.table.comments.push_back("detected_total = " + format_double(res.counts.values.at(0)));
    s.table.columns = {"time_ns", "counts"};
    for (std::size_t b = 0; b + 1 < res.histogram.bin_edges_ns.size(); ++b) {
        const double center =
            0.5 * (res.histogram.bin_edges_ns[b] + res.histogram.bin_edges_ns[b + 1]);
        s.table.rows.push_back({center, static_cast<double>(res.histogram.counts[b])});
    }
    s.records = std::move(res.records);
    return s;
}

} // namespace detail

/// Runs a scenario with both engines as requested. Monte Carlo series draw
/// their master seeds from spec.seed and the series ordinal (counted over
/// Monte Carlo series only, so analytic-only reruns never shift them).
inline ScenarioResult run_scenario(const ScenarioSpec& spec) {
    validated(spec.config);
    for (const auto& v : validate(spec.source))
        throw ConfigError(v);
    for (const auto& v : validate(spec.od_calibration))
        throw ConfigError(v);
    if (spec.sweep_values.empty())
        throw ScenarioError("scenario has an empty sweep");

    ScenarioResult result;
    result.spec = spec;
    std::uint64_t mc_ordinal = 0;
    const bool analytic = detail::runs_analytic(spec.engine);
    const bool montecarlo = detail::runs_montecarlo(spec.engine);

    const auto sweep_note = [&](double v) {
        return "sweep: " + spec.sweep_parameter + " = " + format_double(v);
    };

    switch (spec.name) {
    case ScenarioName::Fig1d:
    case ScenarioName::Fig2:
    case ScenarioName::Fig3: {
        for (double v : spec.sweep_values) {
            const InterferometerConfig cfg =
                apply_sweep(spec.config, spec.sweep_parameter, v, spec.od_calibration);
            std::string id = detail::sweep_label(spec.sweep_parameter, v);
            if (spec.name == ScenarioName::Fig1d)
                id = v > 0.5 ? "closed" : "open";
            if (analytic)
                result.series.push_back(detail::analytic_fringe_series(spec, cfg, id, sweep_note(v)));
            if (montecarlo)
                result.series.push_back(detail::mc_fringe_series(
                    spec, cfg, id, sweep_note(v), detail::series_seed(spec.seed, mc_ordinal++)));
        }
        break;
    }

    case ScenarioName::Fig4: {
        if (analytic) {
            const auto profile = storage_time_visibility_profile(spec.config, spec.sweep_values);
            SeriesResult s;
            s.id = "profile_analytic";
            s.table.comments = detail::series_header(spec, "profile", "analytic");
            double peak_t = profile.front().first, peak_v = profile.front().second;
            for (const auto& [t, vis] : profile)
                if (vis > peak_v) {
                    peak_v = vis;
                    peak_t = t;
                }
            s.table.comments.push_back("peak_storage_time_ns = " + format_double(peak_t));
            s.table.comments.push_back("peak_visibility = " + format_double(peak_v));
            s.table.columns = {"storage_time_ns", "visibility"};
            for (const auto& [t, vis] : profile)
                s.table.rows.push_back({t, vis});
            result.series.push_back(std::move(s));
        }
        if (montecarlo) {
            const std::uint64_t master = detail::series_seed(spec.seed, mc_ordinal++);
            const auto grid = scenario_phase_grid(spec.phase_points);
            ExperimentOptions opt;
            opt.threads = spec.threads;
            opt.histogram_bins = spec.histogram_bins;
            SeriesResult s;
            s.id = "profile_montecarlo";
            s.table.comments = detail::series_header(spec, "profile", "montecarlo");
            s.table.comments.push_back("trials_per_point = " +
                                       std::to_string(spec.trials_per_point));
            s.table.comments.push_back("seed = " + std::to_string(master));
            s.table.columns = {"storage_time_ns", "visibility"};
            for (std::size_t j = 0; j < spec.sweep_values.size(); ++j) {
                const InterferometerConfig cfg = apply_sweep(
                    spec.config, spec.sweep_parameter, spec.sweep_values[j], spec.od_calibration);
                const ExperimentResult res =
                    run_experiment(cfg, spec.source, grid, spec.trials_per_point,
                                   detail::series_seed(master, j), opt);
                double vis = 0.0;
                try {
                    vis = visibility_from_fringe(res.counts).value;
                } catch (const FitError&) {
                    vis = 0.0; // stays identically zero only with no light at all
                }
                s.table.rows.push_back({spec.sweep_values[j], vis});
            }
            result.series.push_back(std::move(s));
        }
        break;
    }

    case ScenarioName::Fig5a: {
        for (double v : spec.sweep_values) {
            const InterferometerConfig cfg =
                apply_sweep(spec.config, spec.sweep_parameter, v, spec.od_calibration);
            const std::string id = v == 0.0 ? "inphase" : "antiphase";
            if (analytic)
                result.series.push_back(
                    detail::analytic_histogram_series(spec, cfg, id, sweep_note(v)));
            if (montecarlo)
                result.series.push_back(detail::mc_histogram_series(
                    spec, cfg, id, sweep_note(v), detail::series_seed(spec.seed, mc_ordinal++)));
        }
        break;
    }

    case ScenarioName::Fig5b: {
        // three sub-runs: each memory decaying alone, then the closed
        // interferometer at constructive phase
        struct Variant {
            const char* id;
            InterferometerConfig cfg;
        };
        std::vector<Variant> variants;
        {
            InterferometerConfig m1 = spec.config;
            m1.qrng.xi = 0.0; // open: only the first memory is interrogated
            variants.push_back({"memory1", m1});
            InterferometerConfig m2 = spec.config;
            m2.qrng.xi = 1.0;
            m2.mbs1.eta_stored = 0.0; // nothing retrieved from the first memory
            variants.push_back({"memory2", m2});
            InterferometerConfig both = spec.config;
            both.qrng.xi = 1.0;
            both.eom_phase_rad = 0.0;
            variants.push_back({"interferometer", both});
        }
        for (const auto& variant : variants) {
            if (analytic) {
                SeriesResult s;
                s.id = std::string(variant.id) + "_analytic";
                s.table.comments = detail::series_header(spec, variant.id, "analytic");
                s.table.comments.push_back("trials_per_point = " +
                                           std::to_string(spec.trials_per_point));
                s.table.columns = {"storage_time_ns", "expected_counts"};
                std::vector<std::pair<double, double>> pts;
                InterferometerConfig scan = variant.cfg;
                for (double t : spec.sweep_values) {
                    scan.mbs1.storage_time_ns = t;
                    scan.mbs2.storage_time_ns = t;
                    const double expected =
                        static_cast<double>(spec.trials_per_point) *
                        expected_detection_probability(scan, spec.source, scan.eom_phase_rad);
                    pts.emplace_back(t, expected);
                    s.table.rows.push_back({t, expected});
                }
                detail::append_decay_stats(s.table.comments, pts);
                result.series.push_back(std::move(s));
            }
            if (montecarlo) {
                const std::uint64_t master = detail::series_seed(spec.seed, mc_ordinal++);
                ExperimentOptions opt;
                opt.threads = spec.threads;
                const auto scan = decoherence_scan(variant.cfg, spec.source, spec.sweep_values,
                                                   spec.trials_per_point, master, opt);
                SeriesResult s;
                s.id = std::string(variant.id) + "_montecarlo";
                s.table.comments = detail::series_header(spec, variant.id, "montecarlo");
                s.table.comments.push_back("trials_per_point = " +
                                           std::to_string(spec.trials_per_point));
                s.table.comments.push_back("seed = " + std::to_string(master));
                s.table.columns = {"storage_time_ns", "counts"};
                std::vector<std::pair<double, double>> pts;
                for (const auto& [t, counts] : scan) {
                    pts.emplace_back(t, static_cast<double>(counts));
                    s.table.rows.push_back({t, static_cast<double>(counts)});
                }
                detail::append_decay_stats(s.table.comments, pts);
                result.series.push_back(std::move(s));
            }
        }
        break;
    }

    case ScenarioName::Fig5c: {
        const auto grid = scenario_phase_grid(spec.phase_points);
        if (analytic) {
            SeriesResult s;
            s.id = "odcurve_analytic";
            s.table.comments = detail::series_header(spec, "odcurve", "analytic");
            s.table.comments.push_back("calib_eta_max = " +
                                       format_double(spec.od_calibration.eta_max));
            s.table.comments.push_back("calib_od_sat = " +
                                       format_double(spec.od_calibration.od_sat));
            s.table.columns = {"od", "eta2", "visibility"};
            for (double od : spec.sweep_values) {
                const InterferometerConfig cfg =
                    apply_sweep(spec.config, "od", od, spec.od_calibration);
                s.table.rows.push_back({od, od_to_efficiency(od, spec.od_calibration),
                                        visibility_analytic(cfg)});
            }
            result.series.push_back(std::move(s));
        }
        if (montecarlo) {
            const std::uint64_t master = detail::series_seed(spec.seed, mc_ordinal++);
            ExperimentOptions opt;
            opt.threads = spec.threads;
            SeriesResult s;
            s.id = "odcurve_montecarlo";
            s.table.comments = detail::series_header(spec, "odcurve", "montecarlo");
            s.table.comments.push_back("trials_per_point = " +
                                       std::to_string(spec.trials_per_point));
            s.table.comments.push_back("seed = " + std::to_string(master));
            s.table.columns = {"od", "eta2", "visibility"};
            for (std::size_t j = 0; j < spec.sweep_values.size(); ++j) {
                const double od = spec.sweep_values[j];
                const InterferometerConfig cfg =
                    apply_sweep(spec.config, "od", od, spec.od_calibration);
                const ExperimentResult res =
                    run_experiment(cfg, spec.source, grid, spec.trials_per_point,
                                   detail::series_seed(master, j), opt);
                double vis = 0.0;
                try {
                    vis = visibility_from_fringe(res.counts).value;
                } catch (const FitError&) {
                    vis = 0.0;
                }
                s.table.rows.push_back({od, od_to_efficiency(od, spec.od_calibration), vis});
            }
            result.series.push_back(std::move(s));
        }
        break;
    }
    }
    return result;
}

/// Scenario spec -> config bundle, the payload of the provenance sidecar.
inline ConfigBundle bundle_from_spec(const ScenarioSpec& spec) {
    ConfigBundle b;
    b.config = spec.config;
    b.source = spec.source;
    b.od_calibration = spec.od_calibration;
    b.timing = spec.timing;
    b.scenario.name = to_string(spec.name);
    b.scenario.engine = to_string(spec.engine);
    b.scenario.format = spec.format == TableFormat::Tsv ? "tsv" : "csv";
    b.scenario.seed = spec.seed;
    b.scenario.trials_per_point = spec.trials_per_point;
    b.scenario.total_counts = spec.total_counts;
    b.scenario.phase_points = spec.phase_points;
    b.scenario.sweep_parameter = spec.sweep_parameter;
    b.scenario.sweep_values = spec.sweep_values;
    return b;
}

/// Config bundle -> scenario spec. The config part is taken literally
/// (absent keys keep type defaults); the scenario block must name the
/// scenario and may override the figure defaults for sweep, seed, trials,
/// normalization and grid. Provenance sidecars carry every field, so
/// running one replays the original byte for byte.
inline ScenarioSpec spec_from_bundle(const ConfigBundle& b) {
    if (b.scenario.name.empty())
        throw ScenarioError("config has no scenario.name");
    ScenarioSpec spec = default_scenario(scenario_name_from_string(b.scenario.name));
    spec.config = b.config;
    spec.source = b.source;
    spec.od_calibration = b.od_calibration;
    spec.timing = b.timing;
    if (!b.scenario.engine.empty())
        spec.engine = engine_from_string(b.scenario.engine);
    if (!b.scenario.format.empty()) {
        if (b.scenario.format == "tsv")
            spec.format = TableFormat::Tsv;
        else if (b.scenario.format == "csv")
            spec.format = TableFormat::Csv;
        else
            throw ScenarioError("unknown table format '" + b.scenario.format + "'");
    }
    if (b.scenario.seed)
        spec.seed = *b.scenario.seed;
    if (b.scenario.trials_per_point)
        spec.trials_per_point = *b.scenario.trials_per_point;
    if (b.scenario.total_counts)
        spec.total_counts = *b.scenario.total_counts;
    if (b.scenario.phase_points)
        spec.phase_points = *b.scenario.phase_points;
    if (!b.scenario.sweep_parameter.empty())
        spec.sweep_parameter = b.scenario.sweep_parameter;
    if (b.scenario.sweep_values)
        spec.sweep_values = *b.scenario.sweep_values;
    return spec;
}

/// Writes one data file per series plus the provenance sidecar (and record
/// streams when requested) into out_dir. Returns the written paths in
/// emission order.
inline std::vector<std::string> emit(const ScenarioResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    const std::string stem = to_string(result.spec.name);
    for (const auto& s : result.series) {
        const std::string path =
            out_dir + "/" + stem + "_" + s.id + table_extension(result.spec.format);
        write_table_file(path, s.table, result.spec.format);
        written.push_back(path);
        if (!s.records.empty()) {
            const std::string rpath = out_dir + "/" + stem + "_" + s.id + ".records";
            write_trial_records(rpath, s.records);
            written.push_back(rpath);
        }
    }
    const std::string sidecar = out_dir + "/" + stem + "_provenance.txt";
    write_text_file(sidecar, format_config(bundle_from_spec(result.spec)));
    written.push_back(sidecar);
    return written;
}

} // namespace tmzi
