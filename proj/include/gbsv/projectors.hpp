// C-number kernels of the phase-space expansion: cat-state normalizations
// g_p, T-factors, count and pattern projectors, and moment estimators.
// Everything that can reach large |n| or large m is evaluated in log domain.

#ifndef GBSV_PROJECTORS_HPP
#define GBSV_PROJECTORS_HPP

#include "gbsv/core.hpp"

#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace gbsv {

/// Natural log of m!. Table-backed; Stirling beyond the table.
inline double log_factorial(int m) {
    static const std::vector<double> table = [] {
        std::vector<double> t(131072);
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = std::lgamma(static_cast<double>(i) + 1.0);
        return t;
    }();
    if (m < 0) throw ValidationError("log_factorial: negative argument");
    if (static_cast<std::size_t>(m) < table.size()) return table[static_cast<std::size_t>(m)];
    // Stirling series; next omitted term is < 1e-15 here.
    const double x = m + 1.0;
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * M_PI) +
           1.0 / (12.0 * x) - 1.0 / (360.0 * x * x * x);
}

// ---------------------------------------------------------------------------
// LogWeight: value = phase * exp(log_magnitude), phase on the unit circle.
// Keeps kernels with factorials and cosh of large arguments finite.
// ---------------------------------------------------------------------------
struct LogWeight {
    double log_magnitude = -std::numeric_limits<double>::infinity();
    Complex phase = 1.0;  // unit modulus; ±1 for real kernels

    static LogWeight zero() { return {}; }

    static LogWeight one() { return {0.0, 1.0}; }

    static LogWeight from_value(Complex v) {
        const double a = std::abs(v);
        if (a == 0.0) return zero();
        return {std::log(a), v / a};
    }

    bool is_zero() const { return std::isinf(log_magnitude) && log_magnitude < 0; }

    Complex value() const { return is_zero() ? Complex(0.0) : phase * std::exp(log_magnitude); }

    friend LogWeight operator*(const LogWeight& a, const LogWeight& b) {
        if (a.is_zero() || b.is_zero()) return zero();
        return {a.log_magnitude + b.log_magnitude, a.phase * b.phase};
    }

    friend LogWeight operator/(const LogWeight& a, const LogWeight& b) {
        if (b.is_zero()) throw SingularEvaluation("LogWeight: division by zero kernel");
        if (a.is_zero()) return zero();
        return {a.log_magnitude - b.log_magnitude, a.phase / b.phase};
    }

    friend LogWeight operator+(const LogWeight& a, const LogWeight& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        const double lm = std::max(a.log_magnitude, b.log_magnitude);
        const Complex v = a.phase * std::exp(a.log_magnitude - lm) +
                          b.phase * std::exp(b.log_magnitude - lm);
        const double av = std::abs(v);
        if (av == 0.0) return zero();
        return {lm + std::log(av), v / av};
    }
};

inline LogWeight scale(const LogWeight& w, Complex c) {
    return LogWeight::from_value(c) * w;
}

namespace detail {

constexpr double kLn2 = 0.6931471805599453;

/// log cosh(z) as a LogWeight. Stable for any |Re z|; exact zero weight at
/// the cosh zeros z = i(π/2 + kπ).
inline LogWeight log_cosh_w(Complex z) {
    if (z.imag() == 0.0) {
        const double ax = std::abs(z.real());
        return {ax - kLn2 + std::log1p(std::exp(-2.0 * ax)), 1.0};
    }
    const Complex s = (z.real() >= 0.0) ? z : -z;  // cosh is even
    const Complex w = std::exp(-2.0 * s);
    const Complex c = 1.0 + w;
    if (std::abs(c) == 0.0) return LogWeight::zero();
    const Complex lc = std::log(c);
    return {s.real() - kLn2 + lc.real(), std::polar(1.0, s.imag() + lc.imag())};
}

/// log sinh(z) as a LogWeight; phase carries the sign. Zero weight at z = ikπ.
inline LogWeight log_sinh_w(Complex z) {
    if (z.imag() == 0.0) {
        const double x = z.real();
        if (x == 0.0) return LogWeight::zero();
        const double ax = std::abs(x);
        const Complex sign = (x > 0.0) ? 1.0 : -1.0;
        if (ax < 1.0) return {std::log(std::sinh(ax)), sign};
        return {ax - kLn2 + std::log1p(-std::exp(-2.0 * ax)), sign};
    }
    if (std::abs(z) < 0.5) return LogWeight::from_value(std::sinh(z));
    const bool neg = z.real() < 0.0;
    const Complex s = neg ? -z : z;
    const Complex w = std::exp(-2.0 * s);
    const Complex c = 1.0 - w;
    if (std::abs(c) == 0.0) return LogWeight::zero();
    const Complex lc = std::log(c);
    LogWeight r{s.real() - kLn2 + lc.real(), std::polar(1.0, s.imag() + lc.imag())};
    if (neg) r.phase = -r.phase;  // sinh is odd
    return r;
}

/// n^m / m! in log form.
inline LogWeight log_power_factorial(Complex n, int m) {
    if (m < 0) throw ValidationError("kernel: negative count");
    if (n == Complex(0.0)) return (m == 0) ? LogWeight::one() : LogWeight::zero();
    if (n.imag() == 0.0) {
        const double x = n.real();
        const Complex sign = (x < 0.0 && (m & 1)) ? -1.0 : 1.0;
        return {m * std::log(std::abs(x)) - log_factorial(m), sign};
    }
    return {m * std::log(std::abs(n)) - log_factorial(m),
            std::polar(1.0, m * std::arg(n))};
}

/// The parity brackets of the count projector, written through hyperbolic
/// difference identities so that n_S = n gives 1/cosh(n) and an exact zero:
///   even, T0: cosh(n−n_S)/cosh(n)     odd, T0: sinh(n−n_S)/cosh(n)
///   even, T1: sinh(n−n_S)/sinh(n)     odd, T1: cosh(n−n_S)/sinh(n)
inline LogWeight parity_bracket(Complex n_S, Complex n, bool odd_count,
                                const OmegaMatrix& omega) {
    if (omega.order != 2)
        throw ValidationError("parity kernels require an order-2 Omega matrix");
    const Complex d = n - n_S;
    const Complex w00 = omega.entries(0, 0);
    const Complex w11 = omega.entries(1, 1);
    LogWeight out = LogWeight::zero();
    if (w00 != Complex(0.0)) {
        const LogWeight denom = log_cosh_w(n);
        if (denom.is_zero()) throw SingularEvaluation("parity kernel: cosh(n) = 0");
        const LogWeight num = odd_count ? log_sinh_w(d) : log_cosh_w(d);
        out = out + scale(num / denom, w00);
    }
    if (w11 != Complex(0.0)) {
        const LogWeight denom = log_sinh_w(n);
        if (denom.is_zero()) throw SingularEvaluation("parity kernel: sinh(n) = 0");
        const LogWeight num = odd_count ? log_cosh_w(d) : log_sinh_w(d);
        out = out + scale(num / denom, w11);
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cat-state algebra for general order N
// ---------------------------------------------------------------------------

/// g_p(n) = Σ_j n^(p+jN)/(p+jN)!  — cosh(n)/sinh(n) at N = 2, and n^p/p!
/// in the Bloch limit N >> |n|. Entire function; summed directly until the
/// term drops below 1e-16 of the partial sum (absolute floor 1e-300).
inline Complex cat_normalization(Complex n, int order, int p) {
    if (order < 1) throw ValidationError("cat_normalization: order must be >= 1");
    if (p < 0 || p >= order) throw ValidationError("cat_normalization: index out of range");
    if (n == Complex(0.0)) return (p == 0) ? 1.0 : 0.0;
    Complex term = 1.0;
    for (int k = 1; k <= p; ++k) term *= n / static_cast<double>(k);
    Complex sum = term;
    for (int j = 0; j < 100000; ++j) {
        const int base = p + j * order;
        for (int k = base + 1; k <= base + order; ++k) term *= n / static_cast<double>(k);
        sum += term;
        if (std::abs(term) < std::max(1e-16 * std::abs(sum), 1e-300)) break;
    }
    return sum;
}

/// T_p = g_{p−1}/g_p with cyclic index; tanh/coth at N = 2, p/n as N → ∞.
inline Complex t_factor(Complex n, int order, int p) {
    if (order == 2) {
        const double big = 350.0;  // cosh/sinh overflow guard
        if (p == 0) {
            if (std::abs(n.real()) > big) return n.real() > 0 ? 1.0 : -1.0;
            const Complex c = std::cosh(n);
            if (std::abs(c) == 0.0) throw SingularEvaluation("t_factor: cosh(n) = 0");
            return std::sinh(n) / c;
        }
        if (std::abs(n.real()) > big) return n.real() > 0 ? 1.0 : -1.0;
        const Complex s = std::sinh(n);
        if (std::abs(s) == 0.0) throw SingularEvaluation("t_factor: sinh(n) = 0");
        return std::cosh(n) / s;
    }
    const int prev = (p == 0) ? order - 1 : p - 1;
    const Complex gp = cat_normalization(n, order, p);
    if (std::abs(gp) == 0.0) throw SingularEvaluation("t_factor: g_p(n) = 0");
    return cat_normalization(n, order, prev) / gp;
}

// ---------------------------------------------------------------------------
// Count projectors
// ---------------------------------------------------------------------------

/// Positive-P projector onto total count m of a mode subset with occupation
/// sum n_S:  n_S^m e^{−n_S} / m!.
inline LogWeight positive_p_count_kernel(Complex n_S, int m) {
    LogWeight w = detail::log_power_factorial(n_S, m);
    if (w.is_zero()) return w;
    w.log_magnitude -= n_S.real();
    if (n_S.imag() != 0.0) w.phase *= std::polar(1.0, -n_S.imag());
    return w;
}

/// Parity (matrix-P) projector onto subset total count m, traced against Ω:
/// [C(n_S) T^{p_m} − S(n_S) T^{p̄_m}] n_S^m/m!. Here n is the full-mode
/// occupation that enters T and n_S the subset sum (n_S = n when the subset
/// is all modes, which reduces the even kernel to n^m/(m! cosh n) and makes
/// odd kernels identically zero).
inline LogWeight parity_count_kernel(Complex n_S, Complex n, int m,
                                     const OmegaMatrix& omega) {
    const LogWeight powfac = detail::log_power_factorial(n_S, m);
    if (powfac.is_zero() && m > 0) return LogWeight::zero();
    return detail::parity_bracket(n_S, n, (m & 1) != 0, omega) * powfac;
}

/// Projector onto a full per-mode count pattern over a subset.
/// amplitudes holds the subset occupations n_i = α'_i (β'_i)*.
inline LogWeight pattern_kernel(const std::vector<int>& m_vec,
                                const std::vector<Complex>& amplitudes,
                                Complex n, const OmegaMatrix& omega,
                                Representation representation) {
    if (m_vec.size() != amplitudes.size())
        throw ValidationError("pattern_kernel: counts/amplitudes size mismatch");
    LogWeight prod = LogWeight::one();
    Complex n_S = 0.0;
    int m = 0;
    for (std::size_t i = 0; i < m_vec.size(); ++i) {
        prod = prod * detail::log_power_factorial(amplitudes[i], m_vec[i]);
        n_S += amplitudes[i];
        m += m_vec[i];
    }
    if (representation == Representation::PositiveP) {
        if (prod.is_zero()) return prod;
        prod.log_magnitude -= n_S.real();
        if (n_S.imag() != 0.0) prod.phase *= std::polar(1.0, -n_S.imag());
        return prod;
    }
    return detail::parity_bracket(n_S, n, (m & 1) != 0, omega) * prod;
}

/// Mean-photon estimator kernel: n for positive-P, n tr[TΩ] for matrix-P
/// (n tanh n in the pure-squeezed parity case).
inline Complex mean_photon_kernel(Complex n, Representation representation,
                                  const OmegaMatrix& omega = OmegaMatrix::parity_even()) {
    if (representation == Representation::PositiveP) return n;
    Complex tr = 0.0;
    const Complex w00 = omega.entries(0, 0);
    const Complex w11 = omega.entries(1, 1);
    if (w00 != Complex(0.0)) tr += w00 * t_factor(n, 2, 0);
    if (w11 != Complex(0.0)) tr += w11 * t_factor(n, 2, 1);
    if (!std::isfinite(tr.real()) || !std::isfinite(tr.imag()))
        throw SingularEvaluation("mean_photon_kernel: T-factor not finite");
    return n * tr;
}

/// Normally ordered moment kernel ⟨:n̂^m:⟩ → n^m tr[T^{p_m} Ω] with
/// p_m = [1 − (−1)^m]/2; even powers coincide with the positive-P value.
inline Complex moment_kernel(Complex n, int m, Representation representation,
                             const OmegaMatrix& omega = OmegaMatrix::parity_even()) {
    if (m < 0) throw ValidationError("moment_kernel: negative power");
    const Complex nm = std::pow(n, m);
    if (representation == Representation::PositiveP || (m & 1) == 0) return nm;
    Complex tr = 0.0;
    const Complex w00 = omega.entries(0, 0);
    const Complex w11 = omega.entries(1, 1);
    if (w00 != Complex(0.0)) tr += w00 * t_factor(n, 2, 0);
    if (w11 != Complex(0.0)) tr += w11 * t_factor(n, 2, 1);
    return nm * tr;
}

// ---------------------------------------------------------------------------
// Vectorized kernel rows (estimator hot path)
// ---------------------------------------------------------------------------

/// Fill out[m], m = 0..out.size()-1, with the total-count kernel at full-mode
/// occupation n. Matrix-P rows have exact zeros at odd m; even entries follow
/// the two-step recurrence K_{m+2} = K_m n²/((m+1)(m+2)) seeded in log domain
/// at the peak, so no intermediate overflows for any |n|.
inline void total_count_kernel_row(Complex n, Representation representation,
                                   const OmegaMatrix& omega, std::span<Complex> out) {
    const int count = static_cast<int>(out.size());
    if (count == 0) return;
    std::fill(out.begin(), out.end(), Complex(0.0));

    if (representation == Representation::PositiveP) {
        if (n == Complex(0.0)) {
            out[0] = 1.0;
            return;
        }
        int m0 = static_cast<int>(std::llround(std::abs(n)));
        m0 = std::clamp(m0, 0, count - 1);
        out[static_cast<std::size_t>(m0)] = positive_p_count_kernel(n, m0).value();
        for (int m = m0; m + 1 < count; ++m)
            out[static_cast<std::size_t>(m + 1)] =
                out[static_cast<std::size_t>(m)] * n / static_cast<double>(m + 1);
        for (int m = m0; m > 0; --m)
            out[static_cast<std::size_t>(m - 1)] =
                out[static_cast<std::size_t>(m)] * static_cast<double>(m) / n;
        return;
    }

    // Matrix-P, subset = all modes: even kernels n^m/(m! cosh n) weighted by
    // tr Ω over the even/odd blocks; odd kernels identically zero.
    if (n == Complex(0.0)) {
        out[0] = omega.entries(0, 0);  // cosh(0) = 1
        return;
    }
    const LogWeight lcosh = detail::log_cosh_w(n);
    if (lcosh.is_zero()) throw SingularEvaluation("total count kernel: cosh(n) = 0");
    const Complex w00 = omega.entries(0, 0);
    int m0 = 2 * static_cast<int>(std::llround(std::abs(n) / 2.0));
    if (m0 > count - 1) m0 = (count - 1) & ~1;
    const LogWeight seed = detail::log_power_factorial(n, m0) / lcosh;
    out[static_cast<std::size_t>(m0)] = w00 * seed.value();
    const Complex n2 = n * n;
    for (int m = m0; m + 2 < count; m += 2)
        out[static_cast<std::size_t>(m + 2)] =
            out[static_cast<std::size_t>(m)] * n2 /
            static_cast<double>((m + 1) * (m + 2));
    for (int m = m0; m >= 2; m -= 2)
        out[static_cast<std::size_t>(m - 2)] =
            out[static_cast<std::size_t>(m)] * static_cast<double>((m - 1) * m) / n2;

    // Odd-block weight (Ω₁₁) would add S(n)-normalized terms; zero for the
    // pure squeezed-state Ω = diag(1,0).
    const Complex w11 = omega.entries(1, 1);
    if (w11 != Complex(0.0)) {
        const LogWeight lsinh = detail::log_sinh_w(n);
        if (lsinh.is_zero()) throw SingularEvaluation("total count kernel: sinh(n) = 0");
        for (int m = 0; m < count; m += 2) {
            const LogWeight term =
                (detail::log_power_factorial(n, m) / lsinh);
            out[static_cast<std::size_t>(m)] += w11 * term.value();
        }
    }
}

/// Subset-total variant: kernels at subset occupation n_S with the T-matrix
/// argument still the full-mode n. Odd subset counts are genuinely nonzero.
inline void subset_count_kernel_row(Complex n_S, Complex n,
                                    Representation representation,
                                    const OmegaMatrix& omega, std::span<Complex> out) {
    const int count = static_cast<int>(out.size());
    if (count == 0) return;
    if (representation == Representation::PositiveP) {
        total_count_kernel_row(n_S, representation, omega, out);
        return;
    }
    std::fill(out.begin(), out.end(), Complex(0.0));
    const LogWeight even_br = detail::parity_bracket(n_S, n, false, omega);
    const LogWeight odd_br = detail::parity_bracket(n_S, n, true, omega);
    if (n_S == Complex(0.0)) {
        out[0] = even_br.value();
        return;
    }
    const double lg = std::log(std::abs(n_S));
    const double ar = std::arg(n_S);
    for (int m = 0; m < count; ++m) {
        const LogWeight& br = (m & 1) ? odd_br : even_br;
        if (br.is_zero()) continue;
        const double lm = br.log_magnitude + m * lg - log_factorial(m);
        out[static_cast<std::size_t>(m)] =
            br.phase * std::polar(std::exp(lm), m * ar);
    }
}

/// Σ_m kernel(m): 1 per trajectory for positive-P and tr Ω for matrix-P.
/// Adaptive truncation: stops once three successive terms fall below 1e-16
/// of the running sum.
inline Complex kernel_completeness_sum(Complex n_S, Complex n,
                                       Representation representation,
                                       const OmegaMatrix& omega,
                                       int max_terms = 1 << 20) {
    Complex sum = 0.0;
    int quiet = 0;
    for (int m = 0; m < max_terms; ++m) {
        const LogWeight w = (representation == Representation::PositiveP)
                                ? positive_p_count_kernel(n_S, m)
                                : parity_count_kernel(n_S, n, m, omega);
        const Complex term = w.value();
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum)) {
            if (++quiet >= 3 && m > std::abs(n_S)) break;
        } else {
            quiet = 0;
        }
    }
    return sum;
}

}  // namespace gbsv

#endif  // GBSV_PROJECTORS_HPP
