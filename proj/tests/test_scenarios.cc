#include <tmzi/scenarios.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "test_util.hh"

namespace tmzi {
namespace {

double comment_value(const Table& t, const std::string& key) {
    for (const auto& c : t.comments)
        if (c.rfind(key + " = ", 0) == 0)
            return std::strtod(c.c_str() + key.size() + 3, nullptr);
    ADD_FAILURE() << "missing comment '" << key << "'";
    return std::numeric_limits<double>::quiet_NaN();
}

const SeriesResult& series_by_id(const ScenarioResult& r, const std::string& id) {
    for (const auto& s : r.series)
        if (s.id == id)
            return s;
    throw std::runtime_error("no series '" + id + "'");
}

std::string fresh_dir(const std::string& tag) {
    const std::string d = testing::TempDir() + "/scen_" + tag;
    std::filesystem::remove_all(d);
    return d;
}

TEST(Defaults, FigurePresetsCarryTheirCaptions) {
    const auto fig2 = default_scenario(ScenarioName::Fig2);
    EXPECT_EQ(fig2.sweep_parameter, "qrng.xi");
    EXPECT_EQ(fig2.sweep_values, (std::vector<double>{0.01, 0.24, 0.53, 0.74, 0.96}));
    EXPECT_EQ(fig2.total_counts, 611.0);
    EXPECT_EQ(fig2.config.mbs1.eta_con, 0.85);
    EXPECT_EQ(fig2.config.detector.efficiency, 0.6);
    EXPECT_EQ(fig2.phase_points, 9);

    const auto fig3 = default_scenario(ScenarioName::Fig3);
    EXPECT_EQ(fig3.sweep_parameter, "mbs2.eta_total");
    EXPECT_EQ(fig3.sweep_values, (std::vector<double>{0.331, 0.259, 0.114, 0.015, 0.0}));
    EXPECT_EQ(fig3.total_counts, 568.0);

    const auto fig4 = default_scenario(ScenarioName::Fig4);
    EXPECT_EQ(fig4.config.mbs1.retrieved_packet.width_ns, 12.0);
    EXPECT_EQ(fig4.config.mbs2.retrieved_packet.width_ns, 8.0);
    EXPECT_EQ(fig4.sweep_parameter, "mbs2.storage_time_ns");

    const auto fig5b = default_scenario(ScenarioName::Fig5b);
    EXPECT_EQ(fig5b.config.mbs1.coherence_time_t1_ns, 420.0);
    EXPECT_EQ(fig5b.config.mbs2.coherence_time_t1_ns, 893.0);
    EXPECT_EQ(fig5b.trials_per_point, 100000u);

    const auto fig5c = default_scenario(ScenarioName::Fig5c);
    EXPECT_EQ(fig5c.sweep_parameter, "od");
    EXPECT_EQ(fig5c.config.mbs1.eta_con, 0.88);
}

TEST(Defaults, NameAndEngineStringsRoundTrip) {
    for (ScenarioName n : {ScenarioName::Fig1d, ScenarioName::Fig2, ScenarioName::Fig3,
                           ScenarioName::Fig4, ScenarioName::Fig5a, ScenarioName::Fig5b,
                           ScenarioName::Fig5c})
        EXPECT_EQ(scenario_name_from_string(to_string(n)), n);
    for (Engine e : {Engine::Analytic, Engine::MonteCarlo, Engine::Both})
        EXPECT_EQ(engine_from_string(to_string(e)), e);
    EXPECT_THROW(scenario_name_from_string("fig9"), ScenarioError);
    EXPECT_THROW(engine_from_string("quantum"), ScenarioError);
}

TEST(Sweeps, PhaseGridCoversOnePeriod) {
    const auto grid = scenario_phase_grid(9);
    ASSERT_EQ(grid.size(), 9u);
    EXPECT_EQ(grid.front(), 0.0);
    EXPECT_NEAR(grid.back(), 2.0 * M_PI, 1e-12);
    for (std::size_t i = 1; i < grid.size(); ++i)
        EXPECT_GT(grid[i], grid[i - 1]);
    EXPECT_THROW(scenario_phase_grid(3), ScenarioError);
}

TEST(Sweeps, ParametersLandOnTheRightKnob) {
    const auto base = default_scenario(ScenarioName::Fig2);
    const OdCalibration calib;

    auto c = apply_sweep(base.config, "qrng.xi", 0.24, calib);
    EXPECT_EQ(c.qrng.xi, 0.24);

    c = apply_sweep(base.config, "mbs2.eta_total", 0.331, calib);
    EXPECT_NEAR(c.mbs2.eta_con * c.mbs2.eta_stored, 0.331, 1e-15);

    c = apply_sweep(base.config, "od", 12.0, calib);
    EXPECT_NEAR(c.mbs2.eta_con * c.mbs2.eta_stored, od_to_efficiency(12.0, calib), 1e-15);

    c = apply_sweep(base.config, "storage_time_ns", 340.0, calib);
    EXPECT_EQ(c.mbs1.storage_time_ns, 340.0);
    EXPECT_EQ(c.mbs2.storage_time_ns, 340.0);

    c = apply_sweep(base.config, "mbs2.storage_time_ns", 260.0, calib);
    EXPECT_EQ(c.mbs1.storage_time_ns, 200.0);
    EXPECT_EQ(c.mbs2.storage_time_ns, 260.0);

    EXPECT_THROW(apply_sweep(base.config, "flux_capacitor", 1.0, calib), ScenarioError);
    // total beyond the write-in efficiency needs eta_stored > 1
    EXPECT_THROW(apply_sweep(base.config, "mbs2.eta_total", 0.7, calib), ConfigError);
}

TEST(Runs, FigTwoProducesOneSeriesPerWeightAndEngine) {
    auto spec = default_scenario(ScenarioName::Fig2, Engine::Analytic);
    const auto analytic = run_scenario(spec);
    ASSERT_EQ(analytic.series.size(), 5u);
    EXPECT_EQ(analytic.series[0].id, "xi0.01_analytic");
    EXPECT_EQ(analytic.series[4].id, "xi0.96_analytic");
    for (const auto& s : analytic.series) {
        EXPECT_EQ(s.table.columns, (std::vector<std::string>{"phase_rad", "expected_counts"}));
        EXPECT_EQ(s.table.rows.size(), 9u);
    }
    // chi-free sanity: fitted visibility equals the closed form it was built from
    const auto& mid = series_by_id(analytic, "xi0.53_analytic");
    EXPECT_NEAR(comment_value(mid.table, "fit_visibility"),
                comment_value(mid.table, "visibility_analytic"), 1e-9);

    spec = default_scenario(ScenarioName::Fig2, Engine::Both);
    spec.trials_per_point = 300;
    spec.threads = 2;
    const auto both = run_scenario(spec);
    ASSERT_EQ(both.series.size(), 10u);
    EXPECT_EQ(both.series[0].id, "xi0.01_analytic");
    EXPECT_EQ(both.series[1].id, "xi0.01_montecarlo");

    const auto dir = fresh_dir("fig2");
    const auto files = emit(both, dir);
    ASSERT_EQ(files.size(), 11u);
    EXPECT_TRUE(std::filesystem::exists(dir + "/fig2_xi0.24_analytic.tsv"));
    EXPECT_TRUE(std::filesystem::exists(dir + "/fig2_xi0.24_montecarlo.tsv"));
    EXPECT_TRUE(std::filesystem::exists(dir + "/fig2_provenance.txt"));
}

TEST(Runs, EmptySweepIsRejected) {
    auto spec = default_scenario(ScenarioName::Fig2, Engine::Analytic);
    spec.sweep_values.clear();
    EXPECT_THROW(run_scenario(spec), ScenarioError);
}

TEST(Runs, RecordSidecarsAppearOnRequest) {
    auto spec = default_scenario(ScenarioName::Fig1d, Engine::MonteCarlo);
    spec.trials_per_point = 200;
    spec.emit_records = true;
    spec.threads = 2;
    const auto result = run_scenario(spec);
    ASSERT_EQ(result.series.size(), 2u);
    EXPECT_EQ(result.series[0].id, "closed_montecarlo");
    EXPECT_EQ(result.series[1].id, "open_montecarlo");
    EXPECT_EQ(result.series[0].records.size(), 9u * 200u);

    const auto dir = fresh_dir("fig1d_records");
    const auto files = emit(result, dir);
    ASSERT_EQ(files.size(), 5u); // two tables, two record streams, provenance
    EXPECT_TRUE(std::filesystem::exists(dir + "/fig1d_closed_montecarlo.records"));
}

TEST(Runs, ProvenanceSidecarReplaysByteForByte) {
    auto spec = default_scenario(ScenarioName::Fig1d, Engine::Both);
    spec.trials_per_point = 500;
    spec.seed = 42;
    spec.threads = 2;
    const auto dir_a = fresh_dir("replay_a");
    const auto files_a = emit(run_scenario(spec), dir_a);

    const ScenarioSpec replay = spec_from_bundle(load_config_file(dir_a + "/fig1d_provenance.txt"));
    const auto dir_b = fresh_dir("replay_b");
    const auto files_b = emit(run_scenario(replay), dir_b);

    ASSERT_EQ(files_a.size(), files_b.size());
    for (std::size_t i = 0; i < files_a.size(); ++i) {
        EXPECT_EQ(std::filesystem::path(files_a[i]).filename(),
                  std::filesystem::path(files_b[i]).filename());
        EXPECT_EQ(read_text_file(files_a[i]), read_text_file(files_b[i])) << files_a[i];
    }
}

TEST(Runs, ThreadCountNeverChangesEmittedBytes) {
    auto spec = default_scenario(ScenarioName::Fig2, Engine::MonteCarlo);
    spec.trials_per_point = 1000;
    spec.seed = 9;
    spec.threads = 1;
    const auto dir_serial = fresh_dir("threads_1");
    const auto serial = emit(run_scenario(spec), dir_serial);
    spec.threads = 4;
    const auto dir_parallel = fresh_dir("threads_4");
    const auto parallel = emit(run_scenario(spec), dir_parallel);
    ASSERT_EQ(serial.size(), parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i)
        EXPECT_EQ(read_text_file(serial[i]), read_text_file(parallel[i]))
            << std::filesystem::path(serial[i]).filename();
}

TEST(Runs, McStreamsDoNotDependOnTheAnalyticEngine) {
    auto spec = default_scenario(ScenarioName::Fig2, Engine::MonteCarlo);
    spec.trials_per_point = 400;
    spec.seed = 7;
    spec.threads = 2;
    const auto mc_only = run_scenario(spec);
    spec.engine = Engine::Both;
    const auto both = run_scenario(spec);
    for (const auto& s : mc_only.series) {
        const auto& twin = series_by_id(both, s.id);
        EXPECT_EQ(format_table(s.table, TableFormat::Tsv), format_table(twin.table, TableFormat::Tsv))
            << s.id;
    }
}

TEST(Runs, StorageProfileFindsTheMatchedPoint) {
    const auto spec = default_scenario(ScenarioName::Fig4, Engine::Analytic);
    const auto result = run_scenario(spec);
    ASSERT_EQ(result.series.size(), 1u);
    const auto& s = result.series[0];
    EXPECT_EQ(s.id, "profile_analytic");
    EXPECT_EQ(s.table.columns, (std::vector<std::string>{"storage_time_ns", "visibility"}));
    EXPECT_EQ(comment_value(s.table, "peak_storage_time_ns"), 200.0);
    EXPECT_NEAR(comment_value(s.table, "peak_visibility"), 0.809230664606858, 1e-6);
    ASSERT_EQ(s.table.rows.size(), spec.sweep_values.size());
}

TEST(Runs, EomPhaseSeriesAreLabeledByInterference) {
    auto spec = default_scenario(ScenarioName::Fig5a, Engine::Analytic);
    const auto result = run_scenario(spec);
    ASSERT_EQ(result.series.size(), 2u);
    EXPECT_EQ(result.series[0].id, "inphase_analytic");
    EXPECT_EQ(result.series[1].id, "antiphase_analytic");
    for (const auto& s : result.series)
        EXPECT_EQ(s.table.columns, (std::vector<std::string>{"time_ns", "expected_counts"}));
}

TEST(Runs, CoherenceVariantsDecayWithTheirOwnMemory) {
    auto spec = default_scenario(ScenarioName::Fig5b, Engine::Analytic);
    const auto result = run_scenario(spec);
    ASSERT_EQ(result.series.size(), 3u);
    const auto& m1 = series_by_id(result, "memory1_analytic");
    const auto& m2 = series_by_id(result, "memory2_analytic");
    EXPECT_NEAR(comment_value(m1.table, "fit_decay_time_ns"), 420.0, 420.0 * 1e-3);
    EXPECT_NEAR(comment_value(m2.table, "fit_decay_time_ns"), 893.0, 893.0 * 1e-3);
}

TEST(Runs, CoherenceDecayIsRecoverableFromSampledCounts) {
    auto spec = default_scenario(ScenarioName::Fig5b, Engine::MonteCarlo);
    spec.trials_per_point = 20000;
    spec.seed = 5;
    spec.threads = 4;
    const auto result = run_scenario(spec);
    const auto& m1 = series_by_id(result, "memory1_montecarlo");
    EXPECT_NEAR(comment_value(m1.table, "fit_decay_time_ns"), 420.0, 420.0 * 0.25);
}

TEST(Runs, OdCurveTracksTheCalibration) {
    auto spec = default_scenario(ScenarioName::Fig5c, Engine::Analytic);
    const auto result = run_scenario(spec);
    const auto& s = series_by_id(result, "odcurve_analytic");
    EXPECT_EQ(s.table.columns, (std::vector<std::string>{"od", "eta2", "visibility"}));
    ASSERT_EQ(s.table.rows.size(), spec.sweep_values.size());
    double prev = -1.0;
    for (const auto& row : s.table.rows) {
        EXPECT_DOUBLE_EQ(row[1], od_to_efficiency(row[0], spec.od_calibration));
        EXPECT_GE(row[2], prev);
        prev = row[2];
    }
    EXPECT_EQ(s.table.rows.front()[2], 0.0); // no second splitter, no fringe
}

TEST(Bundles, SpecRequiresAScenarioName) {
    ConfigBundle b;
    EXPECT_THROW(spec_from_bundle(b), ScenarioError);
    b.scenario.name = "fig3";
    b.scenario.trials_per_point = 777;
    const ScenarioSpec spec = spec_from_bundle(b);
    EXPECT_EQ(spec.name, ScenarioName::Fig3);
    EXPECT_EQ(spec.trials_per_point, 777u);
    EXPECT_THROW(spec_from_bundle([] {
                     ConfigBundle bad;
                     bad.scenario.name = "fig3";
                     bad.scenario.format = "xml";
                     return bad;
                 }()),
                 ScenarioError);
}

} // namespace
} // namespace tmzi
