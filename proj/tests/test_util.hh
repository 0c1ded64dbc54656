#pragma once

#include <tmzi/tmzi.hpp>

#include <cmath>
#include <cstdint>

namespace tmzi::testutil {

// Write-in efficiency 0.85 with total first-memory efficiency 0.133 and
// total second-memory efficiency 0.24, matched 200 ns storage, no decay:
// the closed-interferometer workhorse used across the suite.
inline InterferometerConfig reference_config() {
    InterferometerConfig c;
    c.mbs1.eta_con = 0.85;
    c.mbs1.eta_stored = 0.133 / 0.85;
    c.mbs1.storage_time_ns = 200.0;
    c.mbs1.retrieved_packet = {PacketShape::ExponentialDecay, 0.0, 10.0};
    c.mbs2.eta_con = 0.6;
    c.mbs2.eta_stored = 0.4;
    c.mbs2.storage_time_ns = 200.0;
    c.mbs2.retrieved_packet = {PacketShape::ExponentialDecay, 0.0, 10.0};
    c.fiber_delay_ns = 1000.0;
    return c;
}

// Draws a valid config spanning the whole supported parameter space. The
// phase convention stays at its default so the fringe extrema sit exactly
// on phi = 0 and phi = pi, which the grid-based checks rely on.
inline WavePacket random_packet(TrialRng& rng) {
    WavePacket p;
    const double u = rng.uniform();
    p.shape = u < 1.0 / 3.0   ? PacketShape::Gaussian
              : u < 2.0 / 3.0 ? PacketShape::ExponentialDecay
                              : PacketShape::Rectangular;
    p.width_ns = 5.0 + 55.0 * rng.uniform();
    p.center_ns = -20.0 + 40.0 * rng.uniform();
    return p;
}

inline InterferometerConfig random_config(TrialRng& rng) {
    InterferometerConfig c;
    c.mbs1.eta_con = 0.05 + 0.90 * rng.uniform();
    c.mbs1.eta_stored = 0.05 + 0.95 * rng.uniform();
    c.mbs1.storage_time_ns = 300.0 * rng.uniform();
    c.mbs1.coherence_time_t1_ns = rng.uniform() < 0.5
                                      ? std::numeric_limits<double>::infinity()
                                      : 100.0 + 1900.0 * rng.uniform();
    c.mbs1.retrieved_packet = random_packet(rng);
    c.mbs2.eta_con = 0.05 + 0.90 * rng.uniform();
    c.mbs2.eta_stored = 0.05 + 0.95 * rng.uniform();
    c.mbs2.storage_time_ns = 300.0 * rng.uniform();
    c.mbs2.coherence_time_t1_ns = rng.uniform() < 0.5
                                      ? std::numeric_limits<double>::infinity()
                                      : 100.0 + 1900.0 * rng.uniform();
    c.mbs2.retrieved_packet = random_packet(rng);
    c.eom_phase_rad = 2.0 * M_PI * rng.uniform();
    c.fiber_delay_ns = 2000.0 * rng.uniform();
    c.qrng.xi = rng.uniform();
    c.qrng.mode = rng.uniform() < 0.5 ? QrngMode::Amplitude : QrngMode::Ensemble;
    return c;
}

// Poisson sampler built on the test stream only (the library never needs
// one). Knuth's product method, chunked so large means stay in exp range.
inline std::uint64_t poisson_sample(TrialRng& rng, double lambda) {
    std::uint64_t total = 0;
    while (lambda > 30.0) {
        lambda -= 30.0;
        const double limit = std::exp(-30.0);
        double p = rng.uniform();
        while (p > limit) {
            ++total;
            p *= rng.uniform();
        }
    }
    const double limit = std::exp(-lambda);
    double p = rng.uniform();
    while (p > limit) {
        ++total;
        p *= rng.uniform();
    }
    return total;
}

} // namespace tmzi::testutil
