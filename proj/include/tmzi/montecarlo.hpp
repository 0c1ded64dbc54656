#pragma once

// Trial-level Monte Carlo engine. Every trial draws from its own counter
// based RNG stream derived from (master seed, point index, trial index), so
// results are bit-identical no matter how trials are scheduled across
// threads.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "evolution.hpp"
#include "model.hpp"

namespace tmzi {

namespace detail {

// splitmix64 finalizer; bijective on 64-bit words
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Counter-based generator: a splitmix64 walk from a per-trial seed. Cheap
/// to construct, no shared state between trials.
class TrialRng {
public:
    explicit TrialRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return detail::mix64(state_);
    }

    /// Uniform in [0, 1) with 53 significant bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1], keeps the log finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Exponential with unit mean.
    double exponential() { return -std::log(1.0 - uniform()); }

private:
    std::uint64_t state_;
};

/// Derives the stream for one trial of one sweep point. The same
/// (master_seed, point_index, trial_index) triple always yields the same
/// stream; distinct triples yield statistically independent ones.
inline TrialRng trial_stream(std::uint64_t master_seed, std::uint64_t point_index,
                             std::uint64_t trial_index) {
    std::uint64_t s = detail::mix64(master_seed ^ 0x632BE59BD9B4E019ULL);
    s = detail::mix64(s ^ (point_index + 0x9E3779B97F4A7C15ULL));
    s = detail::mix64(s ^ (trial_index + 0xC2B2AE3D27D4EB4FULL));
    return TrialRng(s);
}

/// Photon-pair source feeding the interferometer; herald_probability is the
/// per-trial chance that a write-out photon was actually produced and
/// heralded.
struct SourceModel {
    double herald_probability = 0.3;
};

inline std::vector<std::string> validate(const SourceModel& s,
                                         const std::string& prefix = "source") {
    std::vector<std::string> out;
    detail::require_probability(out, prefix + ".herald_probability", s.herald_probability);
    return out;
}

enum class DetectionKind { Signal, Dark };

struct Detection {
    double time_bin_ns = 0.0; // relative to the gate opening
    DetectionKind kind = DetectionKind::Signal;
};

struct TrialRecord {
    std::uint64_t trial_index = 0;
    bool herald_fired = false;
    QrngBranch qrng_outcome = QrngBranch::Out;
    std::optional<Detection> detection;
};

/// QRNG draw: In ("insert second splitter") with probability xi.
inline QrngBranch sample_qrng(double xi, TrialRng& rng) {
    return rng.uniform() < xi ? QrngBranch::In : QrngBranch::Out;
}

/// Everything a trial needs, precomputed once per (config, phase) so the
/// overlap quadrature never runs inside the trial loop. Detection
/// probabilities follow the analytic engine (clamped to 1 before detector
/// thinning, since the amplitude formula can exceed unit probability at
/// extreme efficiencies); detection times follow the interfered temporal
/// intensity of the two retrieved packets.
struct TrialLaw {
    double herald_probability = 0.0;
    double xi = 1.0;
    double p_signal_in = 0.0;  // P(signal detected | herald, In)
    double p_signal_out = 0.0; // P(signal detected | herald, Out)
    double p_dark = 0.0;       // P(>=1 dark count in the gate)
    double gate_ns = 0.0;
    double gate_start_ns = 0.0;
    std::complex<double> a1; // Retrieved1 amplitude incl. EOM phase
    std::complex<double> a2; // Retrieved2 amplitude incl. carrier residual
    WavePacket packet1, packet2;
    double tau1_ns = 0.0, tau2_ns = 0.0; // absolute packet reference times
};

inline TrialLaw make_trial_law(const InterferometerConfig& c, const SourceModel& src,
                               double phi_rad, std::optional<std::complex<double>> zeta = {}) {
    const std::complex<double> z = zeta ? *zeta : mode_overlap(c);
    TrialLaw law;
    law.herald_probability = src.herald_probability;
    law.xi = c.qrng.xi;
    const double eps = c.detector.efficiency;
    law.p_signal_in = std::min(1.0, closed_detection_probability(c, phi_rad, z)) * eps;
    law.p_signal_out = std::min(1.0, open_detection_probability(c)) * eps;
    law.p_dark = 1.0 - std::exp(-c.detector.dark_rate_hz * c.detector.gate_window_ns * 1e-9);
    law.gate_ns = c.detector.gate_window_ns;
    const double e1 = effective_efficiency(c.mbs1);
    const double b = (1.0 - c.mbs1.eta_con) * effective_efficiency(c.mbs2);
    law.a1 = std::polar(std::sqrt(e1), phi_rad);
    law.a2 = std::polar(std::sqrt(b), theta2_minus_theta1(c));
    law.packet1 = c.mbs1.retrieved_packet;
    law.packet2 = c.mbs2.retrieved_packet;
    law.tau1_ns = c.fiber_delay_ns + c.mbs1.storage_time_ns;
    law.tau2_ns = c.fiber_delay_ns + c.mbs2.storage_time_ns;
    // gate centered on the expected Retrieved1 window
    law.gate_start_ns = law.tau1_ns + law.packet1.center_ns - 0.5 * law.gate_ns;
    return law;
}

namespace detail {

/// Draw from the normalized intensity |psi|^2 of one packet, in packet-local
/// time (center included).
inline double sample_packet_time(const WavePacket& p, TrialRng& rng) {
    switch (p.shape) {
    case PacketShape::Gaussian:
        return p.center_ns + p.width_ns * M_SQRT1_2 * rng.normal();
    case PacketShape::ExponentialDecay:
        return p.center_ns + p.width_ns * rng.exponential();
    case PacketShape::Rectangular:
        return p.center_ns + p.width_ns * (rng.uniform() - 0.5);
    }
    return p.center_ns;
}

/// Rejection sampler for the interfered intensity
/// I(t) = |a1 psi1(t - tau1) + a2 psi2(t - tau2)|^2, bounded by twice the
/// weighted mixture of the individual intensities.
inline double sample_interference_time(const TrialLaw& law, TrialRng& rng) {
    const double w1 = std::norm(law.a1);
    const double w2 = std::norm(law.a2);
    const double wsum = w1 + w2;
    double t = law.tau1_ns + law.packet1.center_ns;
    if (!(wsum > 0.0))
        return t;
    for (int iter = 0; iter < 100000; ++iter) {
        const bool from_first = rng.uniform() * wsum < w1;
        t = from_first ? law.tau1_ns + sample_packet_time(law.packet1, rng)
                       : law.tau2_ns + sample_packet_time(law.packet2, rng);
        const double f1 = envelope(law.packet1, t - law.tau1_ns);
        const double f2 = envelope(law.packet2, t - law.tau2_ns);
        const double mixture = w1 * f1 * f1 + w2 * f2 * f2; // wsum * q(t)
        if (!(mixture > 0.0))
            continue;
        const double target = std::norm(law.a1 * f1 + law.a2 * f2);
        if (rng.uniform() * 2.0 * mixture <= target)
            return t;
    }
    return t; // cap unreachable in practice; last proposal is a safe fallback
}

} // namespace detail

/// One trial. Fixed draw order from the stream: herald, QRNG, signal
/// presence, signal time (if any), dark presence, dark time (if any). Dark
/// counts fire whether or not a photon was heralded; when both a signal and
/// a dark candidate exist in one gate the earlier one is recorded (signal on
/// a tie). Detection times are clamped into [0, gate_window].
inline TrialRecord run_trial(const TrialLaw& law, std::uint64_t trial_index, TrialRng& rng) {
    TrialRecord rec;
    rec.trial_index = trial_index;
    rec.herald_fired = rng.uniform() < law.herald_probability;
    rec.qrng_outcome = sample_qrng(law.xi, rng);

    bool have_signal = false;
    double t_signal = 0.0;
    if (rec.herald_fired) {
        const bool in = rec.qrng_outcome == QrngBranch::In;
        const double p_sig = in ? law.p_signal_in : law.p_signal_out;
        if (rng.uniform() < p_sig) {
            have_signal = true;
            double t = in ? detail::sample_interference_time(law, rng)
                          : law.tau1_ns + detail::sample_packet_time(law.packet1, rng);
            t_signal = std::clamp(t - law.gate_start_ns, 0.0, law.gate_ns);
        }
    }
    bool have_dark = rng.uniform() < law.p_dark;
    double t_dark = 0.0;
    if (have_dark)
        t_dark = law.gate_ns * rng.uniform();

    if (have_signal && (!have_dark || t_signal <= t_dark))
        rec.detection = Detection{t_signal, DetectionKind::Signal};
    else if (have_dark)
        rec.detection = Detection{t_dark, DetectionKind::Dark};
    return rec;
}

/// Convenience form building the law on the fly (one overlap quadrature per
/// call; use the TrialLaw form inside loops).
inline TrialRecord run_trial(const InterferometerConfig& c, const SourceModel& src, double phi_rad,
                             std::uint64_t trial_index, TrialRng& rng) {
    return run_trial(make_trial_law(c, src, phi_rad), trial_index, rng);
}

/// Detection-time histogram over the gate, aggregated across a run.
struct CountHistogram {
    std::vector<double> bin_edges_ns; // size bins + 1, spanning [0, gate]
    std::vector<std::uint64_t> counts;
    std::uint64_t total_trials = 0;
};

struct ExperimentOptions {
    int threads = 0; // 0 picks hardware concurrency
    int histogram_bins = 50;
    bool keep_records = false;
};

struct ExperimentResult {
    FringeScan counts; // values are integer detection counts per phase
    CountHistogram histogram;
    std::vector<TrialRecord> records; // filled only when keep_records is set
};

/// Exact per-trial detection probability realized by run_trial: the
/// herald/QRNG mixture of clamped, detector-thinned signal probabilities,
/// combined with the dark-count probability as independent events. This is
/// the oracle the Monte Carlo frequencies are tested against.
inline double expected_detection_probability(const InterferometerConfig& c,
                                             const SourceModel& src, double phi_rad) {
    const std::complex<double> z = mode_overlap(c);
    const double eps = c.detector.efficiency;
    const double p_in = std::min(1.0, closed_detection_probability(c, phi_rad, z)) * eps;
    const double p_out = std::min(1.0, open_detection_probability(c)) * eps;
    const double p_dark =
        1.0 - std::exp(-c.detector.dark_rate_hz * c.detector.gate_window_ns * 1e-9);
    const double xi = c.qrng.xi;
    const double with_herald =
        xi * (1.0 - (1.0 - p_in) * (1.0 - p_dark)) + (1.0 - xi) * (1.0 - (1.0 - p_out) * (1.0 - p_dark));
    return src.herald_probability * with_herald + (1.0 - src.herald_probability) * p_dark;
}

namespace detail {

struct PointTally {
    std::uint64_t detections = 0;
    std::vector<std::uint64_t> hist;
};

/// Runs trials [0, trials) of one sweep point, splitting the range across
/// threads. Aggregation order is fixed (chunks are summed in index order),
/// so the result is independent of scheduling.
inline PointTally run_point(const TrialLaw& law, std::uint64_t master_seed,
                            std::uint64_t point_index, std::uint64_t trials, int threads,
                            int histogram_bins, std::vector<TrialRecord>* records) {
    const double bin_w = law.gate_ns / histogram_bins;
    auto worker = [&](std::uint64_t lo, std::uint64_t hi, PointTally& tally) {
        tally.hist.assign(histogram_bins, 0);
        for (std::uint64_t i = lo; i < hi; ++i) {
            TrialRng rng = trial_stream(master_seed, point_index, i);
            TrialRecord rec = run_trial(law, i, rng);
            if (rec.detection) {
                ++tally.detections;
                int bin = static_cast<int>(rec.detection->time_bin_ns / bin_w);
                bin = std::clamp(bin, 0, histogram_bins - 1);
                ++tally.hist[bin];
            }
            if (records)
                (*records)[i] = std::move(rec);
        }
    };

    std::uint64_t want = threads > 0 ? static_cast<std::uint64_t>(threads)
                                     : std::thread::hardware_concurrency();
    want = std::clamp<std::uint64_t>(want, 1, std::max<std::uint64_t>(trials, 1));
    const int n_threads = static_cast<int>(std::min<std::uint64_t>(want, 64));
    std::vector<PointTally> parts(n_threads);
    if (n_threads == 1) {
        worker(0, trials, parts[0]);
    } else {
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (trials + n_threads - 1) / n_threads;
        for (int k = 0; k < n_threads; ++k) {
            const std::uint64_t lo = k * chunk;
            const std::uint64_t hi = std::min<std::uint64_t>(trials, lo + chunk);
            pool.emplace_back(worker, lo, hi, std::ref(parts[k]));
        }
        for (auto& th : pool)
            th.join();
    }
    PointTally total;
    total.hist.assign(histogram_bins, 0);
    for (const auto& part : parts) {
        total.detections += part.detections;
        for (int b = 0; b < histogram_bins; ++b)
            total.hist[b] += part.hist[b];
    }
    return total;
}

} // namespace detail

/// Full fringe experiment: trials_per_phase trials at every grid phase.
/// Phase index doubles as the stream's point index. Counts, histogram and
/// (optionally) records are bit-identical for any thread count.
inline ExperimentResult run_experiment(const InterferometerConfig& c, const SourceModel& src,
                                       const std::vector<double>& phase_grid,
                                       std::uint64_t trials_per_phase, std::uint64_t master_seed,
                                       const ExperimentOptions& opt = {}) {
    validated(c);
    if (phase_grid.empty() || trials_per_phase == 0)
        throw std::invalid_argument("run_experiment: empty experiment");
    const std::complex<double> zeta = mode_overlap(c);

    ExperimentResult res;
    res.counts.total_n = static_cast<double>(trials_per_phase);
    res.counts.phases = phase_grid;
    const int bins = std::max(1, opt.histogram_bins);
    res.histogram.counts.assign(bins, 0);
    res.histogram.bin_edges_ns.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        res.histogram.bin_edges_ns[b] = c.detector.gate_window_ns * b / bins;

    if (opt.keep_records)
        res.records.resize(phase_grid.size() * trials_per_phase);
    for (std::size_t pi = 0; pi < phase_grid.size(); ++pi) {
        const TrialLaw law = make_trial_law(c, src, phase_grid[pi], zeta);
        std::vector<TrialRecord>* rec_slice = nullptr;
        std::vector<TrialRecord> slice;
        if (opt.keep_records) {
            slice.resize(trials_per_phase);
            rec_slice = &slice;
        }
        const auto tally =
            detail::run_point(law, master_seed, pi, trials_per_phase, opt.threads, bins, rec_slice);
        res.counts.values.push_back(static_cast<double>(tally.detections));
        for (int b = 0; b < bins; ++b)
            res.histogram.counts[b] += tally.hist[b];
        res.histogram.total_trials += trials_per_phase;
        if (opt.keep_records)
            std::move(slice.begin(), slice.end(),
                      res.records.begin() + pi * trials_per_phase);
    }
    return res;
}

/// Detected counts versus matched storage time: both memories are swept
/// together at the configured EOM phase. Grid index is the stream's point
/// index.
inline std::vector<std::pair<double, std::uint64_t>>
decoherence_scan(const InterferometerConfig& c, const SourceModel& src,
                 const std::vector<double>& storage_time_grid_ns, std::uint64_t trials_per_point,
                 std::uint64_t master_seed, const ExperimentOptions& opt = {}) {
    validated(c);
    if (storage_time_grid_ns.empty() || trials_per_point == 0)
        throw std::invalid_argument("decoherence_scan: empty experiment");
    std::vector<std::pair<double, std::uint64_t>> out;
    out.reserve(storage_time_grid_ns.size());
    InterferometerConfig scan = c;
    for (std::size_t j = 0; j < storage_time_grid_ns.size(); ++j) {
        scan.mbs1.storage_time_ns = storage_time_grid_ns[j];
        scan.mbs2.storage_time_ns = storage_time_grid_ns[j];
        const TrialLaw law = make_trial_law(scan, src, c.eom_phase_rad);
        const auto tally = detail::run_point(law, master_seed, j, trials_per_point, opt.threads,
                                             std::max(1, opt.histogram_bins), nullptr);
        out.emplace_back(storage_time_grid_ns[j], tally.detections);
    }
    return out;
}

} // namespace tmzi
