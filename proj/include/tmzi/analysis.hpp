#pragma once

// Least-squares fits used to reduce fringes and decay scans: a fixed-period
// sinusoid, an exponential decay with background, and the visibility
// estimate derived from the sinusoid fit. Both fits are three-parameter
// damped Gauss-Newton iterations with analytic Jacobians; no external
// optimizer is involved.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evolution.hpp"

namespace tmzi {

class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

/// Gaussian elimination with partial pivoting. False when the system is
/// numerically singular.
inline bool solve3(Mat3 a, Vec3 b, Vec3& x) {
    double scale = 0.0;
    for (const auto& row : a)
        for (double v : row)
            scale = std::max(scale, std::abs(v));
    if (!(scale > 0.0))
        return false;
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[perm[r]][col]) > std::abs(a[perm[piv]][col]))
                piv = r;
        std::swap(perm[col], perm[piv]);
        const double p = a[perm[col]][col];
        if (std::abs(p) < 1e-14 * scale)
            return false;
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[perm[r]][col] / p;
            for (int c = col; c < 3; ++c)
                a[perm[r]][c] -= f * a[perm[col]][c];
            b[perm[r]] -= f * b[perm[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double s = b[perm[col]];
        for (int c = col + 1; c < 3; ++c)
            s -= a[perm[col]][c] * x[c];
        x[col] = s / a[perm[col]][col];
    }
    return true;
}

inline bool invert3(const Mat3& a, Mat3& inv) {
    for (int col = 0; col < 3; ++col) {
        Vec3 e{0.0, 0.0, 0.0};
        e[col] = 1.0;
        Vec3 x;
        if (!solve3(a, e, x))
            return false;
        for (int r = 0; r < 3; ++r)
            inv[r][col] = x[r];
    }
    return true;
}

struct Fit3Result {
    Vec3 x;
    double chi2 = 0.0;
    int iterations = 0;
    Vec3 std_errors{0.0, 0.0, 0.0};
};

/// Damped Gauss-Newton for a three-parameter model. `eval(x, i)` returns
/// the model value and gradient at abscissa index i; `admissible(x)` can
/// veto steps that leave the model's domain. Convergence is a relative
/// parameter step below 1e-10; failure to converge within 200 iterations
/// throws. Standard errors come from the linearized covariance
/// chi2/(n-3) * (J^T J)^-1 at the solution.
template <typename Eval, typename Admissible>
Fit3Result gauss_newton3(std::size_t n, const std::vector<double>& y, Vec3 x0, Eval eval,
                         Admissible admissible, const char* what) {
    constexpr int max_iter = 200;
    constexpr double step_tol = 1e-10;

    const auto chi2_of = [&](const Vec3& x) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - eval(x, i).first;
            c += r * r;
        }
        return c;
    };

    Fit3Result res;
    res.x = x0;
    res.chi2 = chi2_of(res.x);
    double lambda = 0.0;
    bool converged = false;
    Mat3 jtj{};

    for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
        jtj = Mat3{};
        Vec3 jtr{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            const auto [f, g] = eval(res.x, i);
            const double r = y[i] - f;
            for (int a = 0; a < 3; ++a) {
                jtr[a] += g[a] * r;
                for (int b = 0; b < 3; ++b)
                    jtj[a][b] += g[a] * g[b];
            }
        }

        double grad_scale = 0.0;
        for (double v : jtr)
            grad_scale = std::max(grad_scale, std::abs(v));
        if (grad_scale <= 1e-300) {
            converged = true; // exactly stationary, typical of noiseless data
            break;
        }

        Vec3 dx;
        bool stepped = false;
        while (lambda < 1e12) {
            Mat3 damped = jtj;
            for (int a = 0; a < 3; ++a)
                damped[a][a] += lambda * (jtj[a][a] + 1e-30);
            if (solve3(damped, jtr, dx)) {
                Vec3 trial{res.x[0] + dx[0], res.x[1] + dx[1], res.x[2] + dx[2]};
                if (admissible(trial)) {
                    const double c = chi2_of(trial);
                    if (c <= res.chi2 * (1.0 + 1e-14) + 1e-300) {
                        res.x = trial;
                        res.chi2 = c;
                        lambda = lambda > 0.0 ? lambda * 0.25 : 0.0;
                        if (lambda < 1e-12)
                            lambda = 0.0;
                        stepped = true;
                        break;
                    }
                }
            }
            lambda = lambda > 0.0 ? lambda * 10.0 : 1e-8;
        }
        if (!stepped)
            throw FitError(std::string(what) + ": did not converge (damping exhausted)");

        double rel = 0.0;
        for (int a = 0; a < 3; ++a)
            rel = std::max(rel, std::abs(dx[a]) / (1.0 + std::abs(res.x[a])));
        if (rel < step_tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw FitError(std::string(what) + ": did not converge within 200 iterations");

    // covariance of the linearized problem at the solution
    const double dof = static_cast<double>(n) - 3.0;
    const double s2 = dof > 0.0 ? res.chi2 / dof : 0.0;
    Mat3 cov;
    if (invert3(jtj, cov)) {
        for (int a = 0; a < 3; ++a)
            res.std_errors[a] = std::sqrt(std::max(0.0, s2 * cov[a][a]));
    } else {
        res.std_errors = {std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity()};
    }
    return res;
}

} // namespace detail

/// counts(phi) = offset + amplitude * cos(phi - phase0_rad), amplitude
/// canonicalized nonnegative with phase0 in (-pi, pi]. Standard errors are
/// ordered {amplitude, phase0, offset}.
struct SinusoidFit {
    double amplitude = 0.0;
    double phase0_rad = 0.0;
    double offset = 0.0;
    double residual_norm = 0.0;
    std::array<double, 3> std_errors{0.0, 0.0, 0.0};
    int iterations = 0;
};

inline SinusoidFit fit_sinusoid(const FringeScan& scan) {
    const auto& phi = scan.phases;
    const auto& y = scan.values;
    if (phi.size() != y.size())
        throw FitError("fit_sinusoid: phases and values differ in length");
    const std::size_t n = phi.size();
    std::vector<double> uniq(phi);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 4)
        throw FitError("fit_sinusoid: need at least 4 distinct phases");
    if (uniq.back() - uniq.front() < M_PI - 1e-9)
        throw FitError("fit_sinusoid: degenerate phase grid (span below half a period)");

    // initialize from the discrete Fourier component at the known period
    double sc = 0.0, ss = 0.0, sm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sc += y[i] * std::cos(phi[i]);
        ss += y[i] * std::sin(phi[i]);
        sm += y[i];
    }
    const double alpha = 2.0 * sc / static_cast<double>(n);
    const double beta = 2.0 * ss / static_cast<double>(n);
    detail::Vec3 x0{std::hypot(alpha, beta), std::atan2(beta, alpha), sm / static_cast<double>(n)};

    const auto eval = [&](const detail::Vec3& x, std::size_t i) {
        const double c = std::cos(phi[i] - x[1]);
        const double s = std::sin(phi[i] - x[1]);
        return std::pair<double, detail::Vec3>(x[2] + x[0] * c, {c, x[0] * s, 1.0});
    };
    auto res = detail::gauss_newton3(
        n, y, x0, eval, [](const detail::Vec3&) { return true; }, "fit_sinusoid");

    SinusoidFit fit;
    fit.amplitude = res.x[0];
    fit.phase0_rad = res.x[1];
    fit.offset = res.x[2];
    if (fit.amplitude < 0.0) {
        fit.amplitude = -fit.amplitude;
        fit.phase0_rad += M_PI;
    }
    fit.phase0_rad = std::remainder(fit.phase0_rad, 2.0 * M_PI);
    if (fit.phase0_rad <= -M_PI)
        fit.phase0_rad += 2.0 * M_PI;
    fit.residual_norm = std::sqrt(res.chi2);
    fit.std_errors = res.std_errors;
    fit.iterations = res.iterations;
    return fit;
}

/// counts(t) = amplitude * exp(-t / decay_time_ns) + background. Standard
/// errors are ordered {amplitude, decay_time, background}.
struct DecayFit {
    double amplitude = 0.0;
    double decay_time_ns = 0.0;
    double background = 0.0;
    double residual_norm = 0.0;
    std::array<double, 3> std_errors{0.0, 0.0, 0.0};
    int iterations = 0;
};

inline DecayFit fit_exponential_decay(const std::vector<std::pair<double, double>>& points) {
    const std::size_t n = points.size();
    std::vector<double> t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = points[i].first;
        y[i] = points[i].second;
    }
    std::vector<double> uniq(t);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 4)
        throw FitError("fit_exponential_decay: need at least 4 distinct times");
    const double ymax = *std::max_element(y.begin(), y.end());
    const double ymin = *std::min_element(y.begin(), y.end());
    if (ymax - ymin <= 1e-12 * std::max(1.0, std::abs(ymax)))
        throw FitError("fit_exponential_decay: all counts equal (decay unidentifiable)");

    // log-linear regression on the background-subtracted counts
    double sx = 0.0, sxx = 0.0, sz = 0.0, sxz = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double shifted = y[i] - ymin;
        if (shifted <= 0.0)
            continue;
        const double z = std::log(shifted);
        sx += t[i];
        sxx += t[i] * t[i];
        sz += z;
        sxz += t[i] * z;
        ++m;
    }
    if (m < 2)
        throw FitError("fit_exponential_decay: too few points above background");
    const double det = m * sxx - sx * sx;
    const double slope = det != 0.0 ? (m * sxz - sx * sz) / det : 0.0;
    const double intercept = (sz - slope * sx) / static_cast<double>(m);
    const double span = uniq.back() - uniq.front();
    detail::Vec3 x0{std::exp(intercept), slope < 0.0 ? -1.0 / slope : 10.0 * span, ymin};

    const auto eval = [&](const detail::Vec3& x, std::size_t i) {
        const double e = std::exp(-t[i] / x[1]);
        return std::pair<double, detail::Vec3>(
            x[2] + x[0] * e, {e, x[0] * t[i] / (x[1] * x[1]) * e, 1.0});
    };
    const auto admissible = [](const detail::Vec3& x) { return x[1] > 0.0; };
    auto res = detail::gauss_newton3(n, y, x0, eval, admissible, "fit_exponential_decay");

    DecayFit fit;
    fit.amplitude = res.x[0];
    fit.decay_time_ns = res.x[1];
    fit.background = res.x[2];
    fit.residual_norm = std::sqrt(res.chi2);
    fit.std_errors = res.std_errors;
    fit.iterations = res.iterations;
    if (!(fit.decay_time_ns > 0.0))
        throw FitError("fit_exponential_decay: converged to a non-positive decay time");
    return fit;
}

/// Visibility (max - min) / (max + min) of a fitted fringe. Estimates above
/// one (possible on noisy data when the fitted minimum dips below zero) are
/// clamped and flagged rather than silently returned.
struct VisibilityEstimate {
    double value = 0.0;
    bool clamped = false;
    SinusoidFit fit;
};

inline VisibilityEstimate visibility_from_fringe(const FringeScan& scan) {
    bool any = false;
    for (double v : scan.values)
        any = any || v != 0.0;
    if (!any)
        throw FitError("visibility_from_fringe: all-zero scan");
    VisibilityEstimate est;
    est.fit = fit_sinusoid(scan);
    if (!(est.fit.offset > 0.0))
        throw FitError("visibility_from_fringe: nonpositive fringe baseline");
    const double v = est.fit.amplitude / est.fit.offset;
    est.clamped = v > 1.0;
    est.value = est.clamped ? 1.0 : v;
    return est;
}

} // namespace tmzi
