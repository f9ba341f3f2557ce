#pragma once

// Theta function, Weierstrass ℘ and the Kronecker kernel φ on the torus
// C/(Z + τZ), evaluated in double-precision complex arithmetic.
//
// The theta function used throughout is
//
//   θ(z|τ) = q^{1/8} Σ_n (−1)^n exp(πi(n(n+1)τ + 2nz)),   q = e^{2πiτ},
//
// which satisfies θ(z+1) = θ(z), θ(z+τ) = −e^{−2πi(z+τ)} θ(z) and θ(0) = 0.
// It is i·e^{−πiz}·θ₁(πz|τ) in classical notation, so it is not odd; the
// second and higher logarithmic derivatives coincide with those of θ₁.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "pvi/errors.hpp"

namespace pvi {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};
inline constexpr cplx kTwoPiI{0.0, 2.0 * std::numbers::pi};

/// Minimum admissible Im τ; keeps |q| ≤ e^{−0.1π}.
inline constexpr double kMinImTau = 0.05;
/// Distance to the lattice below which ℘, φ report a pole.
inline constexpr double kLatticeGuard = 1e-8;
inline constexpr double kDefaultTruncTol = 1e-16;
inline constexpr int kMaxSeriesTerms = 10000;

namespace detail {

/// z = reduced + m + n·τ with reduced in [−½,½) + [−½,½)τ.
struct ReducedPoint {
  cplx z;
  double m;
  double n;
};

inline ReducedPoint reduce_to_cell(cplx z, cplx tau) {
  const double b = z.imag() / tau.imag();
  const double n = std::floor(b + 0.5);
  const cplx z1 = z - n * tau;
  const double m = std::floor(z1.real() + 0.5);
  return {z1 - m, m, n};
}

/// θ^{(k)}(z), k = 0..3, by direct summation. Pairs the indices n and −n−1,
/// which share the Gaussian weight e^{πiτ(n+½)²}.
inline std::array<cplx, 4> theta_series(cplx z, cplx tau, double tol) {
  const cplx e = std::exp(kTwoPiI * z);
  const cplx e_inv = 1.0 / e;
  const cplx q = std::exp(kTwoPiI * tau);

  cplx weight = std::exp(kI * kPi * tau * 0.25);  // (−1)^n e^{πiτ(n+½)²} at n = 0
  cplx q_pow = q;                                  // q^{n+1}
  cplx e_pos = 1.0;                                // e^{2πinz}
  cplx e_neg = e_inv;                              // e^{−2πi(n+1)z}

  std::array<cplx, 4> sum{};
  std::array<double, 4> abs_sum{};
  for (int n = 0;; ++n) {
    if (n > kMaxSeriesTerms) {
      throw NonConvergence("theta series exceeded term cap (Im tau too small or argument overflow)");
    }
    const cplx a = weight * e_pos;
    const cplx b = weight * e_neg;
    const cplx kp = kTwoPiI * static_cast<double>(n);
    const cplx km = -kTwoPiI * static_cast<double>(n + 1);
    cplx fp = 1.0;
    cplx fm = 1.0;
    bool converged = n >= 1;
    for (int k = 0; k < 4; ++k) {
      const cplx term = a * fp - b * fm;
      sum[k] += term;
      const double mag = std::abs(term);
      abs_sum[k] += std::abs(a * fp) + std::abs(b * fm);
      if (!(mag <= tol * abs_sum[k])) converged = false;
      fp *= kp;
      fm *= km;
    }
    if (!std::isfinite(abs_sum[3])) throw NonConvergence("theta series overflow");
    if (converged) break;
    weight *= -q_pow;
    q_pow *= q;
    e_pos *= e;
    e_neg *= e_inv;
  }
  return sum;
}

/// log of the factor F with θ(z) = F·θ(z_r) for z = z_r + m + nτ.
inline cplx theta_shift_log(const ReducedPoint& r, cplx tau) {
  const double n = r.n;
  return kI * kPi * n - kTwoPiI * (n * r.z + 0.5 * n * (n + 1.0) * tau);
}

inline long long binom(int k, int j) {
  long long r = 1;
  for (int i = 1; i <= j; ++i) r = r * (k - j + i) / i;
  return r;
}

}  // namespace detail

/// Distance from z to the nearest point of Z + τZ.
inline double lattice_distance(cplx z, cplx tau) {
  const auto r = detail::reduce_to_cell(z, tau);
  double best = std::abs(r.z);
  for (int m = -1; m <= 1; ++m)
    for (int n = -1; n <= 1; ++n) best = std::min(best, std::abs(r.z - (static_cast<double>(m) + static_cast<double>(n) * tau)));
  return best;
}

/// Immutable per-modulus data: τ, truncation tolerance and cached constants
/// (θ derivatives at 0, the ℘ normalisation constant, e₁, e₂, e₃, g₂).
class EllipticContext {
 public:
  explicit EllipticContext(cplx tau, double trunc_tol = kDefaultTruncTol)
      : tau_(tau), tol_(trunc_tol) {
    if (!(tau.imag() >= kMinImTau) || !std::isfinite(tau.real())) {
      throw ValidationError("Im tau must be >= 0.05");
    }
    if (!(trunc_tol > 0.0 && trunc_tol < 1e-3)) throw ValidationError("trunc_tol out of range");
    theta0_ = detail::theta_series(0.0, tau_, tol_);
    // −(log θ)'' = 1/u² − θ'''/(3θ') + θ''²/(4θ'²) + O(u²)
    const cplx t1 = theta0_[1];
    wp_shift_ = theta0_[3] / (3.0 * t1) - theta0_[2] * theta0_[2] / (4.0 * t1 * t1);
    const std::array<cplx, 3> halves{0.5, 0.5 * tau_, 0.5 * (1.0 + tau_)};
    for (int i = 0; i < 3; ++i) e_[i] = wp_reduced(halves[i]).first;
    g2_ = 2.0 * (e_[0] * e_[0] + e_[1] * e_[1] + e_[2] * e_[2]);
  }

  cplx tau() const noexcept { return tau_; }
  double trunc_tol() const noexcept { return tol_; }
  const std::array<cplx, 3>& e_values() const noexcept { return e_; }
  cplx theta_prime_zero() const noexcept { return theta0_[1]; }
  const std::array<cplx, 4>& theta_derivs_zero() const noexcept { return theta0_; }
  cplx wp_shift() const noexcept { return wp_shift_; }
  cplx g2() const noexcept { return g2_; }

  /// T_j/2 for (T₀,…,T₃) = (0, 1, τ, 1+τ).
  std::array<cplx, 4> half_period_points() const noexcept {
    return {0.0, 0.5, 0.5 * tau_, 0.5 * (1.0 + tau_)};
  }

  /// (℘, ℘′) from the log-derivatives of θ at the reduced point.
  std::pair<cplx, cplx> wp_reduced(cplx u) const {
    const auto r = detail::reduce_to_cell(u, tau_);
    const auto t = detail::theta_series(r.z, tau_, tol_);
    const cplx l1 = t[1] / t[0];
    const cplx l2 = t[2] / t[0];
    const cplx l3 = t[3] / t[0];
    const cplx wp = -(l2 - l1 * l1) + wp_shift_;
    const cplx wp1 = -(l3 - 3.0 * l2 * l1 + 2.0 * l1 * l1 * l1);
    return {wp, wp1};
  }

 private:
  cplx tau_;
  double tol_;
  std::array<cplx, 4> theta0_{};
  cplx wp_shift_{};
  std::array<cplx, 3> e_{};
  cplx g2_{};
};

/// θ^{(order)}(z|τ) for order ∈ {0,1,2,3}, with argument reduction and the
/// quasi-periodicity factor re-applied.
inline cplx theta_d(cplx z, const EllipticContext& ctx, int order) {
  if (order < 0 || order > 3) throw ValidationError("theta derivative order must be 0..3");
  const auto r = detail::reduce_to_cell(z, ctx.tau());
  const auto t = detail::theta_series(r.z, ctx.tau(), ctx.trunc_tol());
  const cplx factor = std::exp(detail::theta_shift_log(r, ctx.tau()));
  const cplx shift = -kTwoPiI * r.n;  // F'/F
  cplx acc = 0.0;
  cplx shift_pow = 1.0;
  for (int j = order; j >= 0; --j) {
    acc += static_cast<double>(detail::binom(order, j)) * shift_pow * t[j];
    shift_pow *= shift;
  }
  const cplx out = factor * acc;
  if (!std::isfinite(out.real()) || !std::isfinite(out.imag())) {
    throw NonConvergence("theta overflow after argument reduction");
  }
  return out;
}

inline cplx theta(cplx z, const EllipticContext& ctx) { return theta_d(z, ctx, 0); }

namespace detail {
inline void check_off_lattice(cplx u, const EllipticContext& ctx) {
  if (lattice_distance(u, ctx.tau()) < kLatticeGuard) {
    throw PoleAtLattice("argument within 1e-8 of the lattice");
  }
}
}  // namespace detail

/// ℘ together with its first two u-derivatives.
struct WpValues {
  cplx wp;
  cplx d1;
  cplx d2;
};

inline WpValues wp_all(cplx u, const EllipticContext& ctx) {
  detail::check_off_lattice(u, ctx);
  const auto [p, p1] = ctx.wp_reduced(u);
  return {p, p1, 6.0 * p * p - 0.5 * ctx.g2()};
}

inline cplx wp(cplx u, const EllipticContext& ctx) {
  detail::check_off_lattice(u, ctx);
  return ctx.wp_reduced(u).first;
}

inline cplx wp_prime(cplx u, const EllipticContext& ctx) {
  detail::check_off_lattice(u, ctx);
  return ctx.wp_reduced(u).second;
}

/// (e₁, e₂, e₃) = ℘(T_i/2).
inline std::array<cplx, 3> half_periods(const EllipticContext& ctx) { return ctx.e_values(); }

namespace detail {
/// log θ(z) − log θ_r and θ'/θ at z, used to form quotients without overflow.
struct ThetaLog {
  cplx value_reduced;
  cplx log_factor;
  cplx log_deriv;  // θ'(z)/θ(z)
};

inline ThetaLog theta_log(cplx z, const EllipticContext& ctx) {
  const auto r = reduce_to_cell(z, ctx.tau());
  const auto t = theta_series(r.z, ctx.tau(), ctx.trunc_tol());
  return {t[0], theta_shift_log(r, ctx.tau()), t[1] / t[0] - kTwoPiI * r.n};
}
}  // namespace detail

/// Kronecker kernel φ(u,z) = θ(u+z)θ′(0)/(θ(u)θ(z)); simple pole of residue 1
/// at u = 0 and φ(u, z+τ) = e^{−2πiu} φ(u, z).
inline cplx phi(cplx u, cplx z, const EllipticContext& ctx) {
  detail::check_off_lattice(u, ctx);
  detail::check_off_lattice(z, ctx);
  detail::check_off_lattice(u + z, ctx);
  const auto a = detail::theta_log(u + z, ctx);
  const auto b = detail::theta_log(u, ctx);
  const auto c = detail::theta_log(z, ctx);
  return std::exp(a.log_factor - b.log_factor - c.log_factor) * a.value_reduced *
         ctx.theta_prime_zero() / (b.value_reduced * c.value_reduced);
}

/// φ and ∂φ/∂u at once.
inline std::pair<cplx, cplx> phi_with_du(cplx u, cplx z, const EllipticContext& ctx) {
  detail::check_off_lattice(u, ctx);
  detail::check_off_lattice(z, ctx);
  detail::check_off_lattice(u + z, ctx);
  const auto a = detail::theta_log(u + z, ctx);
  const auto b = detail::theta_log(u, ctx);
  const auto c = detail::theta_log(z, ctx);
  const cplx value = std::exp(a.log_factor - b.log_factor - c.log_factor) * a.value_reduced *
                     ctx.theta_prime_zero() / (b.value_reduced * c.value_reduced);
  return {value, value * (a.log_deriv - b.log_deriv)};
}

}  // namespace pvi
