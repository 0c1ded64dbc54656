#pragma once

// Domain types for the two-memory temporal interferometer: memory beam
// splitters, QRNG choice, detector, timing, and config validation.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "temporal.hpp"

namespace tmzi {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// One memory beam splitter: a write-in stage that converts part of the
/// incident photon into a stored spin wave (eta_con), and a retrieval stage
/// that converts the spin wave back after storage_time_ns (eta_stored).
/// The product eta_con * eta_stored is the memory efficiency quoted for the
/// device; coherence_time_t1_ns damps the stored amplitude at intensity
/// level exp(-t/T1).
struct MemoryBeamSplitter {
    double eta_con = 0.5;
    double eta_stored = 0.5;
    double storage_time_ns = 200.0;
    double coherence_time_t1_ns = std::numeric_limits<double>::infinity();
    WavePacket retrieved_packet{};
};

inline double total_efficiency(const MemoryBeamSplitter& m) {
    return m.eta_con * m.eta_stored;
}

/// How the QRNG weight xi enters predictions. Amplitude folds xi into the
/// second-splitter amplitudes of a single pure state (what fringe fits with
/// a fitted xi assume); Ensemble mixes the closed and open configurations
/// as probabilities, which is what a per-trial experiment realizes.
enum class QrngMode { Amplitude, Ensemble };

struct QrngSpec {
    double xi = 1.0; // probability of "insert second splitter" (In)
    QrngMode mode = QrngMode::Amplitude;
};

struct DetectorModel {
    double efficiency = 0.6;
    double dark_rate_hz = 25.0;
    double gate_window_ns = 500.0;
};

/// Carrier phases imprinted at the two write-in stages. ZeroStoragePhase
/// takes both to be zero so only the EOM phase remains; ExplicitResidual
/// keeps a fixed difference theta2 - theta1 = residual_phase_rad.
enum class PhaseConvention { ZeroStoragePhase, ExplicitResidual };

struct InterferometerConfig {
    MemoryBeamSplitter mbs1{};
    MemoryBeamSplitter mbs2{};
    double eom_phase_rad = 0.0;
    double fiber_delay_ns = 1000.0;
    QrngSpec qrng{};
    DetectorModel detector{};
    PhaseConvention phase_convention = PhaseConvention::ZeroStoragePhase;
    double residual_phase_rad = 0.0;
};

/// Bookkeeping of the experimental duty cycle; not used by the amplitude
/// engine, but carried in configs and provenance for rate estimates.
struct TimingSequence {
    double repetition_rate_hz = 100.0;
    double trap_duration_ms = 8.7;
    double experiment_window_ms = 1.3;
};

/// Saturation curve mapping a programmed optical depth to the second
/// memory's total efficiency.
struct OdCalibration {
    double eta_max = 0.331;
    double od_sat = 15.0;
};

/// eta2(OD) = eta_max * (1 - exp(-OD / od_sat)); monotone increasing, zero
/// at OD = 0, saturating at eta_max.
inline double od_to_efficiency(double od, const OdCalibration& calib = {}) {
    if (!(od >= 0.0))
        throw std::invalid_argument("od_to_efficiency: negative OD");
    return calib.eta_max * (1.0 - std::exp(-od / calib.od_sat));
}

namespace detail {

inline void require_probability(std::vector<std::string>& out, const std::string& name, double v) {
    if (!(v >= 0.0 && v <= 1.0))
        out.push_back(name + ": probability out of range (" + std::to_string(v) + ")");
}

inline void require_finite(std::vector<std::string>& out, const std::string& name, double v) {
    if (!std::isfinite(v))
        out.push_back(name + ": must be finite");
}

inline void require_nonnegative(std::vector<std::string>& out, const std::string& name, double v) {
    if (!(v >= 0.0) || !std::isfinite(v))
        out.push_back(name + ": must be finite and nonnegative");
}

inline void require_positive(std::vector<std::string>& out, const std::string& name, double v) {
    if (!(v > 0.0) || !std::isfinite(v))
        out.push_back(name + ": must be finite and positive");
}

} // namespace detail

inline std::vector<std::string> validate(const WavePacket& p, const std::string& prefix = "packet") {
    std::vector<std::string> out;
    detail::require_finite(out, prefix + ".center_ns", p.center_ns);
    detail::require_positive(out, prefix + ".width_ns", p.width_ns);
    return out;
}

inline std::vector<std::string> validate(const MemoryBeamSplitter& m,
                                         const std::string& prefix = "mbs") {
    std::vector<std::string> out;
    detail::require_probability(out, prefix + ".eta_con", m.eta_con);
    detail::require_probability(out, prefix + ".eta_stored", m.eta_stored);
    detail::require_nonnegative(out, prefix + ".storage_time_ns", m.storage_time_ns);
    // T1 may be infinite (no decay) but not NaN, zero or negative
    if (!(m.coherence_time_t1_ns > 0.0))
        out.push_back(prefix + ".coherence_time_t1_ns: must be positive (may be inf)");
    for (auto& v : validate(m.retrieved_packet, prefix + ".packet"))
        out.push_back(std::move(v));
    return out;
}

inline std::vector<std::string> validate(const QrngSpec& q, const std::string& prefix = "qrng") {
    std::vector<std::string> out;
    detail::require_probability(out, prefix + ".xi", q.xi);
    return out;
}

inline std::vector<std::string> validate(const DetectorModel& d,
                                         const std::string& prefix = "detector") {
    std::vector<std::string> out;
    detail::require_probability(out, prefix + ".efficiency", d.efficiency);
    detail::require_nonnegative(out, prefix + ".dark_rate_hz", d.dark_rate_hz);
    detail::require_positive(out, prefix + ".gate_window_ns", d.gate_window_ns);
    return out;
}

inline std::vector<std::string> validate(const TimingSequence& t,
                                         const std::string& prefix = "timing") {
    std::vector<std::string> out;
    detail::require_positive(out, prefix + ".repetition_rate_hz", t.repetition_rate_hz);
    detail::require_positive(out, prefix + ".trap_duration_ms", t.trap_duration_ms);
    detail::require_positive(out, prefix + ".experiment_window_ms", t.experiment_window_ms);
    if (out.empty() && t.trap_duration_ms + t.experiment_window_ms > 1e3 / t.repetition_rate_hz)
        out.push_back(prefix + ": trap plus experiment window exceeds the repetition period");
    return out;
}

inline std::vector<std::string> validate(const OdCalibration& c, const std::string& prefix = "od") {
    std::vector<std::string> out;
    detail::require_probability(out, prefix + ".eta_max", c.eta_max);
    detail::require_positive(out, prefix + ".od_sat", c.od_sat);
    return out;
}

/// Collects every violated invariant; an empty list means the config is
/// usable by all engines. Validation is pure, so repeating it returns the
/// same report.
inline std::vector<std::string> validate(const InterferometerConfig& c) {
    std::vector<std::string> out;
    for (auto& v : validate(c.mbs1, "mbs1"))
        out.push_back(std::move(v));
    for (auto& v : validate(c.mbs2, "mbs2"))
        out.push_back(std::move(v));
    detail::require_finite(out, "eom_phase_rad", c.eom_phase_rad);
    detail::require_nonnegative(out, "fiber_delay_ns", c.fiber_delay_ns);
    for (auto& v : validate(c.qrng))
        out.push_back(std::move(v));
    for (auto& v : validate(c.detector))
        out.push_back(std::move(v));
    detail::require_finite(out, "residual_phase_rad", c.residual_phase_rad);
    return out;
}

/// Returns the config unchanged if it is valid, otherwise throws a
/// ConfigError listing every violation.
inline const InterferometerConfig& validated(const InterferometerConfig& c) {
    const auto violations = validate(c);
    if (violations.empty())
        return c;
    std::string msg = "invalid config:";
    for (const auto& v : violations)
        msg += "\n  " + v;
    throw ConfigError(msg);
}

} // namespace tmzi
