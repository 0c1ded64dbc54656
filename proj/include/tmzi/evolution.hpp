#pragma once

// Complex-amplitude evolution through the two memory beam splitters, and the
// closed-form fringe and visibility predictions derived from it.

#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "model.hpp"
#include "temporal.hpp"

namespace tmzi {

enum class BranchLabel { Leaked, SpinWave1, Retrieved1, SpinWave2, Retrieved2 };

/// Which way the QRNG decided for a given trial or ensemble member: In means
/// the second splitter is active (closed interferometer), Out means the
/// leaked photon flies past it untouched (open).
enum class QrngBranch { In, Out };

struct Branch {
    BranchLabel label;
    std::complex<double> amplitude;
    double time_offset_ns = 0.0;
};

/// Superposition of labeled branches plus the probability weight lost so
/// far (imperfect retrieval, decoherence, and in Amplitude mode the
/// sub-unitary xi-weighted recombination). sum |amplitude|^2 + loss stays 1
/// through every stage.
struct BranchState {
    std::vector<Branch> branches;
    double loss = 0.0;
};

inline double norm_with_loss(const BranchState& s) {
    double n = s.loss;
    for (const auto& b : s.branches)
        n += std::norm(b.amplitude);
    return n;
}

inline const Branch* find_branch(const BranchState& s, BranchLabel label) {
    for (const auto& b : s.branches)
        if (b.label == label)
            return &b;
    return nullptr;
}

/// Carrier-phase difference theta2 - theta1 between the two write-in stages.
inline double theta2_minus_theta1(const InterferometerConfig& c) {
    return c.phase_convention == PhaseConvention::ExplicitResidual ? c.residual_phase_rad : 0.0;
}

inline double theta1(const InterferometerConfig& c) {
    (void)c; // theta1 is the phase reference in both conventions
    return 0.0;
}

inline double retrieval_decay(const MemoryBeamSplitter& m) {
    return decoherence_factor(m.storage_time_ns, m.coherence_time_t1_ns);
}

/// Memory efficiency including the decoherence accumulated over the
/// configured storage time.
inline double effective_efficiency(const MemoryBeamSplitter& m) {
    return total_efficiency(m) * retrieval_decay(m);
}

/// First splitter: the incident photon divides into a transmitted (Leaked)
/// part and a stored spin wave carrying the write-in carrier phase.
inline BranchState split_at_mbs1(const InterferometerConfig& c) {
    const double eta = c.mbs1.eta_con;
    BranchState s;
    s.branches.push_back({BranchLabel::Leaked, std::sqrt(1.0 - eta), 0.0});
    s.branches.push_back(
        {BranchLabel::SpinWave1, std::polar(std::sqrt(eta), theta1(c)), 0.0});
    return s;
}

/// Retrieval at the first memory: the spin wave becomes Retrieved1 delayed
/// by storage_time, attenuated by retrieval efficiency and decoherence, and
/// stamped with the EOM phase. Unretrieved weight moves to loss.
inline BranchState retrieve_and_phase_mbs1(BranchState s, const InterferometerConfig& c) {
    const double keep = c.mbs1.eta_stored * retrieval_decay(c.mbs1);
    for (auto& b : s.branches) {
        if (b.label != BranchLabel::SpinWave1)
            continue;
        const double w = std::norm(b.amplitude);
        b.label = BranchLabel::Retrieved1;
        b.amplitude *= std::polar(std::sqrt(keep), c.eom_phase_rad);
        b.time_offset_ns += c.mbs1.storage_time_ns;
        s.loss += w * (1.0 - keep);
    }
    return s;
}

/// Second splitter, controlled by the QRNG. Out leaves the state untouched
/// (the photon never meets the second memory). In sends every photonic
/// branch through the fiber and splits the Leaked part into a transmitted
/// remainder plus SpinWave2 carrying the second write-in phase. Amplitude
/// mode weighs the two second-splitter outcomes by xi and (1 - xi) inside
/// one amplitude; the resulting probability deficit 2 xi (1 - xi)
/// (1 - sqrt(1 - eta_con)) |L|^2 is booked into loss so the norm invariant
/// is preserved. Ensemble mode splits unitarily and keeps xi for the
/// probability mixture downstream.
inline BranchState split_at_mbs2(BranchState s, const InterferometerConfig& c, QrngBranch q) {
    if (q == QrngBranch::Out)
        return s;
    const double eta = c.mbs2.eta_con;
    const double xi = c.qrng.xi;
    const std::complex<double> store_phase = std::polar(1.0, theta1(c) + theta2_minus_theta1(c));
    BranchState out;
    out.loss = s.loss;
    for (auto& b : s.branches) {
        if (b.label == BranchLabel::SpinWave1 || b.label == BranchLabel::SpinWave2) {
            out.branches.push_back(b);
            continue;
        }
        b.time_offset_ns += c.fiber_delay_ns;
        if (b.label != BranchLabel::Leaked) {
            out.branches.push_back(b);
            continue;
        }
        const std::complex<double> a = b.amplitude;
        double pass_coeff, store_coeff;
        if (c.qrng.mode == QrngMode::Amplitude) {
            pass_coeff = xi * std::sqrt(1.0 - eta) + (1.0 - xi);
            store_coeff = xi * std::sqrt(eta);
            out.loss += std::norm(a) *
                        (1.0 - pass_coeff * pass_coeff - store_coeff * store_coeff);
        } else {
            pass_coeff = std::sqrt(1.0 - eta);
            store_coeff = std::sqrt(eta);
        }
        out.branches.push_back({BranchLabel::Leaked, a * pass_coeff, b.time_offset_ns});
        out.branches.push_back(
            {BranchLabel::SpinWave2, a * store_coeff * store_phase, b.time_offset_ns});
    }
    return out;
}

/// Retrieval at the second memory: SpinWave2 becomes Retrieved2 after the
/// second storage time, attenuated like the first retrieval. With equal
/// storage times the two retrieved branches end up at the same time offset.
inline BranchState retrieve_mbs2(BranchState s, const InterferometerConfig& c) {
    const double keep = c.mbs2.eta_stored * retrieval_decay(c.mbs2);
    for (auto& b : s.branches) {
        if (b.label != BranchLabel::SpinWave2)
            continue;
        const double w = std::norm(b.amplitude);
        b.label = BranchLabel::Retrieved2;
        b.amplitude *= std::sqrt(keep);
        b.time_offset_ns += c.mbs2.storage_time_ns;
        s.loss += w * (1.0 - keep);
    }
    return s;
}

/// Temporal overlap factor zeta of the two retrieved modes at the configured
/// storage times. Purely the envelope integral; the carrier-phase residual
/// is applied separately by the detection formula.
inline std::complex<double> mode_overlap(const InterferometerConfig& c) {
    const double delta = c.mbs2.storage_time_ns - c.mbs1.storage_time_ns;
    return overlap(c.mbs1.retrieved_packet, c.mbs2.retrieved_packet, delta, 1e-10).zeta;
}

/// Detection probability of the closed (both splitters active, xi = 1)
/// interferometer at EOM phase phi, for a given temporal overlap factor.
/// P = | sqrt((1 - eta1con) eta2_eff) zeta_tot + sqrt(eta1_eff) e^{i phi} |^2
/// with eta_eff folding the exp(-t/T1) decoherence of each memory and
/// zeta_tot = zeta e^{i (theta2 - theta1)}.
inline double closed_detection_probability(const InterferometerConfig& c, double phi_rad,
                                           std::complex<double> zeta) {
    const double e1 = effective_efficiency(c.mbs1);
    const double b = (1.0 - c.mbs1.eta_con) * effective_efficiency(c.mbs2);
    const std::complex<double> zt = zeta * std::polar(1.0, theta2_minus_theta1(c));
    return std::norm(std::sqrt(b) * zt + std::polar(std::sqrt(e1), phi_rad));
}

/// Open interferometer (second splitter off): only Retrieved1 reaches the
/// detection window, so the probability is phase independent.
inline double open_detection_probability(const InterferometerConfig& c) {
    return effective_efficiency(c.mbs1);
}

/// Detection probability with the QRNG weight applied according to the
/// configured mode. Amplitude scales the Retrieved2 amplitude by xi inside
/// the modulus; Ensemble mixes closed and open probabilities linearly.
inline double detection_probability(const InterferometerConfig& c, double phi_rad,
                                    std::complex<double> zeta) {
    const double xi = c.qrng.xi;
    if (c.qrng.mode == QrngMode::Amplitude) {
        const double e1 = effective_efficiency(c.mbs1);
        const double b = (1.0 - c.mbs1.eta_con) * effective_efficiency(c.mbs2);
        const std::complex<double> zt = zeta * std::polar(1.0, theta2_minus_theta1(c));
        return std::norm(xi * std::sqrt(b) * zt + std::polar(std::sqrt(e1), phi_rad));
    }
    return xi * closed_detection_probability(c, phi_rad, zeta) +
           (1.0 - xi) * open_detection_probability(c);
}

/// Same, computing the overlap factor from the configured packets.
inline double detection_probability(const InterferometerConfig& c, double phi_rad) {
    return detection_probability(c, phi_rad, mode_overlap(c));
}

/// Expected fringe over a phase grid. values[i] = total_counts * P(phi_i).
struct FringeScan {
    std::vector<double> phases;
    std::vector<double> values;
    double total_n = 1.0;
};

inline FringeScan fringe(const InterferometerConfig& c, const std::vector<double>& phase_grid,
                         double total_counts = 1.0) {
    if (phase_grid.empty())
        throw std::invalid_argument("fringe: empty phase grid");
    for (size_t i = 1; i < phase_grid.size(); ++i)
        if (!(phase_grid[i] > phase_grid[i - 1]))
            throw std::invalid_argument("fringe: phase grid must be strictly increasing");
    const std::complex<double> zeta = mode_overlap(c);
    FringeScan scan;
    scan.total_n = total_counts;
    scan.phases = phase_grid;
    scan.values.reserve(phase_grid.size());
    for (double phi : phase_grid)
        scan.values.push_back(total_counts * detection_probability(c, phi, zeta));
    return scan;
}

/// Closed-form fringe visibility (Pmax - Pmin) / (Pmax + Pmin) for a given
/// overlap factor. The extremal phases are phi = -arg(zeta_tot) and its
/// opposite, so only |zeta| enters. A fringe with no light at all has
/// visibility zero by convention.
inline double visibility_analytic(const InterferometerConfig& c, std::complex<double> zeta) {
    const double z = std::abs(zeta);
    const double e1 = effective_efficiency(c.mbs1);
    const double b = (1.0 - c.mbs1.eta_con) * effective_efficiency(c.mbs2);
    const double xi = c.qrng.xi;
    if (c.qrng.mode == QrngMode::Amplitude) {
        const double den = e1 + xi * xi * b * z * z;
        return den > 0.0 ? 2.0 * xi * z * std::sqrt(e1 * b) / den : 0.0;
    }
    const double s1 = std::sqrt(e1), s2 = std::sqrt(b) * z;
    const double pmax = xi * (s2 + s1) * (s2 + s1) + (1.0 - xi) * e1;
    const double pmin = xi * (s2 - s1) * (s2 - s1) + (1.0 - xi) * e1;
    const double den = pmax + pmin;
    return den > 0.0 ? (pmax - pmin) / den : 0.0;
}

inline double visibility_analytic(const InterferometerConfig& c) {
    return visibility_analytic(c, mode_overlap(c));
}

/// Visibility as a function of the second storage time, with the first held
/// at its configured value. Each grid point recomputes both the envelope
/// overlap at the corresponding retrieval delay and the second memory's
/// decoherence, so a finite T1 tilts the profile. Returns (storage_time_ns,
/// visibility) pairs.
inline std::vector<std::pair<double, double>>
storage_time_visibility_profile(const InterferometerConfig& c,
                                const std::vector<double>& storage_time_2_grid_ns) {
    if (storage_time_2_grid_ns.empty())
        throw std::invalid_argument("storage_time_visibility_profile: empty grid");
    std::vector<std::pair<double, double>> out;
    out.reserve(storage_time_2_grid_ns.size());
    InterferometerConfig scan = c;
    for (double t : storage_time_2_grid_ns) {
        if (!(t >= 0.0))
            throw std::invalid_argument("storage_time_visibility_profile: negative storage time");
        scan.mbs2.storage_time_ns = t;
        out.emplace_back(t, visibility_analytic(scan, mode_overlap(scan)));
    }
    return out;
}

} // namespace tmzi
