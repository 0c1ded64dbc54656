// Acceptance checks. Each criterion prints exactly one PASS/FAIL line; the
// exit code is the number of failed criteria.

#include <tmzi/tmzi.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "test_util.hh"

namespace {

using namespace tmzi;
using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("%s: %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok)
        ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string tmp_dir(const std::string& tag) {
    const auto d = std::filesystem::temp_directory_path() / ("tmzi_acceptance_" + tag);
    std::filesystem::remove_all(d);
    return d.string();
}

// 1. Closed interferometer, unit overlap: the fringe endpoints must land on
// the two-splitter amplitude law at the 611-count normalization.
void criterion_fringe_endpoints() {
    const auto t0 = Clock::now();
    const auto c = testutil::reference_config();
    const auto scan = fringe(c, {0.0, M_PI}, 611.0);
    const double at_zero = scan.values[0];
    const double at_pi = scan.values[1];
    const bool ok_vals =
        std::abs(at_zero - 187.81574894412626) < 0.1 && std::abs(at_pi - 18.702251055873724) < 0.1;
    const double dt = seconds_since(t0);
    char detail[160];
    std::snprintf(detail, sizeof detail, "counts(0)=%.6f counts(pi)=%.6f in %.3fs", at_zero, at_pi,
                  dt);
    report("constructive and destructive fringe endpoints match the amplitude law",
           ok_vals && dt < 1.0, detail);
}

// 2. Visibility versus the second memory's total efficiency: frozen values,
// checked both by the closed form and by brute-force fringe extrema, with
// visibility strictly decreasing and exactly zero at zero efficiency.
void criterion_efficiency_sweep() {
    auto c = testutil::reference_config();
    c.mbs1.eta_stored = 0.122 / 0.85;
    const double eta2[] = {0.331, 0.259, 0.114, 0.015};
    const double frozen[] = {0.9068296878640681, 0.8560208785129974, 0.6567208975356407,
                             0.26668879719566824};
    std::vector<double> grid(10001);
    for (int i = 0; i <= 10000; ++i)
        grid[i] = M_PI * (i / 5000.0);

    bool ok = true;
    std::string detail;
    double prev = 1.0;
    for (int i = 0; i < 4; ++i) {
        c.mbs2.eta_stored = eta2[i] / 0.6;
        const double v_formula = visibility_analytic(c);
        const auto scan = fringe(c, grid);
        double lo = scan.values[0], hi = scan.values[0];
        for (double val : scan.values) {
            lo = std::min(lo, val);
            hi = std::max(hi, val);
        }
        const double v_grid = (hi - lo) / (hi + lo);
        if (std::abs(v_formula - frozen[i]) > 5e-4 || std::abs(v_grid - frozen[i]) > 5e-4 ||
            v_formula >= prev) {
            ok = false;
            detail = "eta2=" + format_double(eta2[i]) + " formula=" + format_double(v_formula) +
                     " grid=" + format_double(v_grid);
        }
        prev = v_formula;
    }
    c.mbs2.eta_stored = 0.0;
    if (visibility_analytic(c) != 0.0) {
        ok = false;
        detail = "nonzero visibility at zero efficiency";
    }
    report("visibility follows the retrieval-efficiency sweep and dies at zero", ok, detail);
}

// 3. Storage-time mismatch: the visibility profile peaks at the matched
// delay and is suppressed below 15 percent of the peak at the sweep edges.
void criterion_storage_profile() {
    const auto t0 = Clock::now();
    const auto spec = default_scenario(ScenarioName::Fig4, Engine::Analytic);
    const auto profile = storage_time_visibility_profile(spec.config, spec.sweep_values);
    std::size_t peak = 0;
    for (std::size_t i = 1; i < profile.size(); ++i)
        if (profile[i].second > profile[peak].second)
            peak = i;
    const double vpeak = profile[peak].second;
    const bool ok = profile[peak].first == 200.0 && profile.front().second < 0.15 * vpeak &&
                    profile.back().second < 0.15 * vpeak && seconds_since(t0) < 5.0;
    char detail[160];
    std::snprintf(detail, sizeof detail, "peak V=%.4f at %g ns, edges %.4f / %.4f", vpeak,
                  profile[peak].first, profile.front().second, profile.back().second);
    report("fringe visibility collapses away from the matched storage time", ok, detail);
}

// 4. Coherence times: exact recovery from noiseless decays, then a 10
// percent recovery of T1 = 420 ns from sampled counts for 19 of 20 seeds.
void criterion_decay_recovery() {
    bool ok = true;
    std::string detail;
    for (const auto& truth : {std::array<double, 3>{503.0, 420.0, 58.0},
                              std::array<double, 3>{457.0, 893.0, 51.0}}) {
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i <= 11; ++i) {
            const double t = 100.0 * i;
            pts.emplace_back(t, truth[0] * std::exp(-t / truth[1]) + truth[2]);
        }
        const DecayFit fit = fit_exponential_decay(pts);
        if (std::abs(fit.amplitude - truth[0]) > 1e-6 * truth[0] ||
            std::abs(fit.decay_time_ns - truth[1]) > 1e-6 * truth[1] ||
            std::abs(fit.background - truth[2]) > 1e-6 * truth[2]) {
            ok = false;
            detail = "noiseless recovery missed T=" + format_double(truth[1]);
        }
    }

    auto c = default_scenario(ScenarioName::Fig5b).config;
    c.qrng.xi = 0.0; // open path isolates the first memory's decay
    SourceModel src;
    src.herald_probability = 0.3;
    std::vector<double> grid;
    for (int i = 0; i <= 11; ++i)
        grid.push_back(100.0 * i);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto scan = decoherence_scan(c, src, grid, 100000, seed);
        std::vector<std::pair<double, double>> pts;
        for (const auto& [t, k] : scan)
            pts.emplace_back(t, static_cast<double>(k));
        try {
            const DecayFit fit = fit_exponential_decay(pts);
            if (std::abs(fit.decay_time_ns - 420.0) <= 42.0)
                ++hits;
        } catch (const FitError&) {
        }
    }
    if (hits < 19)
        ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("sampled recovery ") +
              std::to_string(hits) + "/20 within 10%";
    report("memory coherence times are recoverable from decay fits", ok, detail);
}

// 5. The closed-form visibility must equal brute-force fringe extrema for
// random configurations in both QRNG modes.
void criterion_visibility_identity() {
    std::vector<double> grid(10001);
    for (int i = 0; i <= 10000; ++i)
        grid[i] = M_PI * (i / 5000.0);
    TrialRng rng(0x51D5u);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        auto c = testutil::random_config(rng);
        c.qrng.mode = i < 50 ? QrngMode::Amplitude : QrngMode::Ensemble;
        const auto scan = fringe(c, grid);
        double lo = scan.values[0], hi = scan.values[0];
        for (double v : scan.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double v_grid = (hi - lo) / (hi + lo);
        worst = std::max(worst, std::abs(v_grid - visibility_analytic(c)));
    }
    report("closed-form visibility equals dense-grid fringe extrema", worst <= 1e-9,
           "worst |difference| = " + format_double(worst));
}

// 6. Norm conservation: amplitude weight plus booked loss stays exactly one
// through every stage, for both QRNG branches, over random configurations.
void criterion_norm_conservation() {
    TrialRng rng(0xAB1Eu);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto c = testutil::random_config(rng);
        const auto s1 = split_at_mbs1(c);
        const auto s2 = retrieve_and_phase_mbs1(s1, c);
        worst = std::max({worst, std::abs(norm_with_loss(s1) - 1.0),
                          std::abs(norm_with_loss(s2) - 1.0)});
        for (QrngBranch q : {QrngBranch::In, QrngBranch::Out}) {
            const auto s3 = split_at_mbs2(s2, c, q);
            const auto s4 = retrieve_mbs2(s3, c);
            worst = std::max({worst, std::abs(norm_with_loss(s3) - 1.0),
                              std::abs(norm_with_loss(s4) - 1.0)});
        }
    }
    report("probability weight is conserved through every splitter stage", worst <= 1e-12,
           "worst |norm - 1| = " + format_double(worst));
}

// 7. Monte Carlo frequencies against the analytic per-trial law: every
// (weight, phase) cell of the full sweep within five binomial sigmas.
void criterion_mc_matches_law() {
    const auto t0 = Clock::now();
    const auto spec = default_scenario(ScenarioName::Fig2);
    SourceModel src = spec.source;
    std::vector<double> grid;
    for (int i = 0; i < 9; ++i)
        grid.push_back(2.0 * M_PI * i / 8.0);
    const std::uint64_t n = 100000;
    bool ok = true;
    std::string detail;
    double worst_z = 0.0;
    for (double xi : spec.sweep_values) {
        auto c = spec.config;
        c.qrng.xi = xi;
        c.qrng.mode = QrngMode::Ensemble;
        const auto res = run_experiment(c, src, grid, n, 20240815);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double p = expected_detection_probability(c, src, grid[i]);
            const double sigma = std::sqrt(n * p * (1.0 - p));
            const double z = std::abs(res.counts.values[i] - n * p) / sigma;
            worst_z = std::max(worst_z, z);
            if (z > 5.0) {
                ok = false;
                detail = "xi=" + format_double(xi) + " phase index " + std::to_string(i) +
                         " z=" + format_double(z);
            }
        }
    }
    const double dt = seconds_since(t0);
    if (dt >= 60.0)
        ok = false;
    char summary[120];
    std::snprintf(summary, sizeof summary, "worst z=%.2f over 45 cells in %.1fs", worst_z, dt);
    report("sampled detection frequencies track the analytic law across the weight sweep", ok,
           detail.empty() ? summary : detail);
}

// 8. Determinism: emitted bytes are identical for repeated runs, for any
// thread count, and for a replay driven by the provenance sidecar.
void criterion_deterministic_output() {
    auto spec = default_scenario(ScenarioName::Fig2, Engine::MonteCarlo);
    spec.trials_per_point = 2000;
    spec.seed = 1234;
    spec.threads = 1;

    const auto read_all = [](const std::vector<std::string>& files) {
        std::string all;
        for (const auto& f : files)
            all += std::filesystem::path(f).filename().string() + "\n" + read_text_file(f);
        return all;
    };

    const auto run_a = read_all(emit(run_scenario(spec), tmp_dir("a")));
    const auto run_b = read_all(emit(run_scenario(spec), tmp_dir("b")));
    spec.threads = 4;
    const std::string dir_c = tmp_dir("c");
    const auto files_c = emit(run_scenario(spec), dir_c);
    const auto run_c = read_all(files_c);

    const ScenarioSpec replay = spec_from_bundle(load_config_file(dir_c + "/fig2_provenance.txt"));
    const auto run_d = read_all(emit(run_scenario(replay), tmp_dir("d")));

    const bool ok = run_a == run_b && run_a == run_c && run_a == run_d;
    report("emitted bytes are identical across reruns, thread counts and provenance replay", ok);
}

} // namespace

int main() {
    criterion_fringe_endpoints();
    criterion_efficiency_sweep();
    criterion_storage_profile();
    criterion_decay_recovery();
    criterion_visibility_identity();
    criterion_norm_conservation();
    criterion_mc_matches_law();
    criterion_deterministic_output();
    std::printf("%d of 8 criteria failed\n", failures);
    return failures;
}
