#pragma once

// Temporal wave-packet envelopes, mode-overlap integrals between the two
// retrieved signals, and spin-wave decoherence factors.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmzi {

class QuadratureError : public std::runtime_error {
public:
    explicit QuadratureError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class PacketShape { Gaussian, ExponentialDecay, Rectangular };

/// Normalized temporal envelope of a photonic mode. width_ns is shape
/// specific: Gaussian field width sigma, ExponentialDecay intensity decay
/// constant, Rectangular full width.
struct WavePacket {
    PacketShape shape = PacketShape::ExponentialDecay;
    double center_ns = 0.0;
    double width_ns = 25.0;
};

/// Envelope value psi(t) in units of ns^-1/2, normalized so the intensity
/// |psi(t)|^2 integrates to one over the real line. All shape families are
/// real-valued; relative carrier phases are tracked at the interferometer
/// level, not here.
inline double envelope(const WavePacket& p, double t_ns) {
    const double x = t_ns - p.center_ns;
    const double w = p.width_ns;
    switch (p.shape) {
    case PacketShape::Gaussian:
        // psi ~ exp(-x^2 / (2 sigma^2)), |psi|^2 a Gaussian of std sigma/sqrt(2)
        return std::pow(M_PI * w * w, -0.25) * std::exp(-x * x / (2.0 * w * w));
    case PacketShape::ExponentialDecay:
        // causal: zero before the retrieval moment
        return x < 0.0 ? 0.0 : std::exp(-x / (2.0 * w)) / std::sqrt(w);
    case PacketShape::Rectangular:
        return (x < -0.5 * w || x > 0.5 * w) ? 0.0 : 1.0 / std::sqrt(w);
    }
    return 0.0;
}

struct PacketSupport {
    double lo_ns;
    double hi_ns;
};

/// Interval outside which the envelope intensity is below double-precision
/// significance (exact for Rectangular). The exponential tail needs a much
/// longer window than the Gaussian one to push the clipped intensity under
/// 1e-18.
inline PacketSupport support(const WavePacket& p) {
    const double c = p.center_ns;
    const double w = p.width_ns;
    switch (p.shape) {
    case PacketShape::Gaussian:
        return {c - 12.0 * w, c + 12.0 * w};
    case PacketShape::ExponentialDecay:
        return {c, c + 45.0 * w};
    case PacketShape::Rectangular:
        return {c - 0.5 * w, c + 0.5 * w};
    }
    return {c, c};
}

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double m, double b, double fa, double fm,
                            double fb, double whole, double tol, double budget, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    if (depth <= 0) {
        // Subdivision has reached floating-point granularity. A residual that
        // still fits the whole piece's budget can only come from a feature too
        // narrow to resolve (for example an endpoint sample landing on the
        // wrong side of a support edge after rounding); its contribution is
        // bounded by the residual itself, so accept it. Anything larger is
        // genuine non-convergence and must be reported.
        if (std::abs(delta) <= 15.0 * budget)
            return left + right + delta / 15.0;
        throw QuadratureError("adaptive quadrature did not converge on [" + std::to_string(a) +
                              ", " + std::to_string(b) + "]");
    }
    return adaptive_simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, budget, depth - 1) +
           adaptive_simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, budget, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 48) {
    if (!(b > a))
        return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, tol, max_depth);
}

} // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] with the given relative
/// tolerance; interior breakpoints split the domain at known kinks so the
/// subdivision does not have to find them. Non-convergence throws, it is
/// never silently truncated.
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double rel_tol = 1e-8, std::vector<double> breaks = {}) {
    if (!(b > a))
        return 0.0;
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> edges;
    for (double x : breaks) {
        x = std::clamp(x, a, b);
        if (edges.empty() || x > edges.back() + 1e-12 * (b - a))
            edges.push_back(x);
    }
    if (edges.size() < 2)
        return 0.0;
    // coarse pass fixes the absolute tolerance for the refinement
    double scale = 0.0;
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        const double lo = edges[i], hi = edges[i + 1], mid = 0.5 * (lo + hi);
        scale += std::abs((hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi)));
    }
    const double tol = std::max(rel_tol * scale, 1e-14);
    const double tol_piece = tol / static_cast<double>(edges.size() - 1);
    double total = 0.0;
    for (size_t i = 0; i + 1 < edges.size(); ++i)
        total += detail::adaptive_simpson(f, edges[i], edges[i + 1], tol_piece);
    return total;
}

/// Complex mode-overlap factor between two retrieved signals.
struct OverlapResult {
    std::complex<double> zeta;
    double magnitude = 0.0;
};

/// zeta = integral of psi1*(t) psi2(t - delta_t) dt. |zeta| = 1 only for
/// identical packets at delta_t = 0 (Cauchy-Schwarz); disjoint supports give
/// exactly zero without touching the quadrature.
inline OverlapResult overlap(const WavePacket& p1, const WavePacket& p2, double delta_t_ns,
                             double rel_tol = 1e-8) {
    const PacketSupport s1 = support(p1);
    const PacketSupport s2 = support(p2);
    const double lo = std::max(s1.lo_ns, s2.lo_ns + delta_t_ns);
    const double hi = std::min(s1.hi_ns, s2.hi_ns + delta_t_ns);
    if (!(hi > lo))
        return {0.0, 0.0};
    const auto integrand = [&](double t) { return envelope(p1, t) * envelope(p2, t - delta_t_ns); };
    // kinks: packet centers (exponential onset) and the shifted support edges
    std::vector<double> breaks{p1.center_ns, p2.center_ns + delta_t_ns, s1.lo_ns, s1.hi_ns,
                               s2.lo_ns + delta_t_ns, s2.hi_ns + delta_t_ns};
    const double value = integrate_adaptive(integrand, lo, hi, rel_tol, std::move(breaks));
    return {std::complex<double>(value, 0.0), std::abs(value)};
}

/// Intensity-level spin-wave decay exp(-t/T1); retrieved amplitudes are
/// scaled by its square root. T1 = infinity disables the decay exactly.
inline double decoherence_factor(double storage_time_ns, double t1_ns) {
    assert(storage_time_ns >= 0.0 && t1_ns > 0.0);
    return std::exp(-storage_time_ns / t1_ns);
}

} // namespace tmzi
