#pragma once

// Critical level: the autonomous Calogero–Inozemtsev system at frozen τ₀, the
// elliptic Calogero N-body flow, their energies, the elliptic-integral time
// oracle for the rank-one PVI_ν potential, and the κ → 0 scaling experiment.
//
// Sign convention follows H = v²/2 − U, so the force is +∂_u U.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/integrators.hpp"
#include "pvi/lax_system.hpp"
#include "pvi/painleve_models.hpp"
#include "pvi/quadrature.hpp"
#include "pvi/special_functions.hpp"

namespace pvi {

struct CriticalConfig {
  cplx tau0{0.0, 1.2};
  cplx nu{1.0};
  std::array<cplx, 4> alpha_vec{};  // rank-one weights
  int N = 2;
  double dt = 1e-3;
  long nsteps = 10000;

  /// Rank-one PVI_ν: α_j = ν²/4.
  static CriticalConfig pvi_nu(cplx nu, cplx tau0 = cplx(0.0, 1.2)) {
    CriticalConfig c;
    c.tau0 = tau0;
    c.nu = nu;
    const cplx a = nu * nu / 4.0;
    c.alpha_vec = {a, a, a, a};
    return c;
  }

  ModelParams model() const { return ModelParams::from_elliptic(alpha_vec).set_nu(nu); }

  void validate() const {
    if (!(tau0.imag() >= kMinImTau)) throw ValidationError("Im tau0 must be >= 0.05");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive");
    if (N < 1) throw ValidationError("N must be >= 1");
  }
};

/// Rank-one force ∂_u U(u|τ₀).
inline cplx ci_force(cplx u, const CriticalConfig& cfg, const EllipticContext& ctx) {
  return potential_dU(u, ctx, cfg.model());
}

inline VecC calogero_force(const VecC& u, const CriticalConfig& cfg, const EllipticContext& ctx) {
  return multicomponent_force(u, ctx, cfg.nu);
}

/// v²/2 − U(u|τ₀); for PVI_ν equals v²/2 + (ν²/4π²)℘(2u|τ₀).
inline cplx ci_energy(cplx u, cplx v, const CriticalConfig& cfg, const EllipticContext& ctx) {
  return 0.5 * v * v - potential_U(u, ctx, cfg.model());
}

/// Σv²/2 − ν²/(2πi)² Σ_{j<k} ℘(u_j − u_k|τ₀).
inline cplx calogero_energy(const VecC& u, const VecC& v, const CriticalConfig& cfg, const EllipticContext& ctx) {
  return 0.5 * (v.array() * v.array()).sum() + multicomponent_potential(u, ctx, cfg.nu);
}

/// Modified energy conserved by kick-drift-kick leapfrog up to O(dt⁴):
/// H + dt²(V''(p,p)/12 − V'·V'/24) with V = −U.
inline cplx ci_shadow_energy(cplx u, cplx v, double dt, const CriticalConfig& cfg, const EllipticContext& ctx) {
  const ModelParams p = cfg.model();
  const cplx dV = -potential_dU(u, ctx, p);
  const cplx d2V = -potential_d2U(u, ctx, p);
  return ci_energy(u, v, cfg, ctx) + dt * dt * (d2V * v * v / 12.0 - dV * dV / 24.0);
}

inline cplx calogero_shadow_energy(const VecC& u, const VecC& v, double dt, const CriticalConfig& cfg,
                                   const EllipticContext& ctx) {
  // V = c Σ_{j<k} ℘(u_j − u_k), c = −ν²/(2πi)².
  const cplx c = -cfg.nu * cfg.nu * kInvTwoPiISq;
  cplx hess = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    for (Eigen::Index k = j + 1; k < u.size(); ++k) {
      const cplx dp = v[j] - v[k];
      hess += c * wp_all(u[j] - u[k], ctx).d2 * dp * dp;
    }
  }
  const VecC grad = -calogero_force(u, cfg, ctx);
  return calogero_energy(u, v, cfg, ctx) + dt * dt * (hess / 12.0 - (grad.array() * grad.array()).sum() / 24.0);
}

struct EnergyReport {
  double drift_rel = 0.0;        // max |H̃(t) − H̃(0)| / |H̃(0)|
  double oscillation_rel = 0.0;  // max |H(t) − H(0)| / |H(0)|
  cplx H0{};
};

/// Energy bookkeeping for an N-body Calogero leapfrog run.
inline EnergyReport calogero_energy_report(const LeapfrogResult& run, double dt, const CriticalConfig& cfg) {
  const EllipticContext ctx(cfg.tau0);
  EnergyReport r;
  r.H0 = calogero_energy(run.q[0], run.p[0], cfg, ctx);
  const cplx S0 = calogero_shadow_energy(run.q[0], run.p[0], dt, cfg, ctx);
  for (std::size_t i = 0; i < run.q.size(); ++i) {
    const cplx H = calogero_energy(run.q[i], run.p[i], cfg, ctx);
    const cplx S = calogero_shadow_energy(run.q[i], run.p[i], dt, cfg, ctx);
    r.oscillation_rel = std::max(r.oscillation_rel, std::abs(H - r.H0) / std::abs(r.H0));
    r.drift_rel = std::max(r.drift_rel, std::abs(S - S0) / std::abs(S0));
  }
  return r;
}

inline LeapfrogResult calogero_leapfrog(const VecC& u0, const VecC& v0, const CriticalConfig& cfg,
                                        long record_every = 1) {
  cfg.validate();
  const EllipticContext ctx(cfg.tau0);
  return leapfrog([&](const VecC& q) { return calogero_force(q, cfg, ctx); }, u0, v0, cfg.dt, cfg.nsteps,
                  record_every);
}

/// High-accuracy Calogero trajectory by the adaptive pair, sampled at `times`.
inline RkResult calogero_rk(const VecC& u0, const VecC& v0, const CriticalConfig& cfg, double T,
                            std::span<const double> times, double rtol = 1e-13, double atol = 1e-15) {
  cfg.validate();
  const EllipticContext ctx(cfg.tau0);
  const Eigen::Index n = u0.size();
  auto f = [&](double, const VecC& y) -> VecC {
    VecC out(2 * n);
    out << y.tail(n), calogero_force(y.head(n), cfg, ctx);
    return out;
  };
  VecC y0(2 * n);
  y0 << u0, v0;
  RkOptions opt;
  opt.rtol = rtol;
  opt.atol = atol;
  return rk_adaptive(f, y0, 0.0, T, opt, times);
}

// ---------------------------------------------------------------------------
// Elliptic-integral time oracle (rank-one PVI_ν at τ₀)
//
// With p = ℘(2u) and H = v²/2 + (ν²/4π²) p = h, dp/dt = 2℘′(2u) v, so
//   t − t₀ = ½ ∫ dp / S,   S² = 4Π(p − e_i) · (2h − ν²p/(2π²)),
// and S = ℘′(2u)v. The branch of S is fixed at the start by ℘′(2u₀)v₀ and
// continued along the p-path in steps of at most 1/64 of its length.

namespace detail {

inline cplx oracle_S2(cplx p, cplx h, cplx nu, const std::array<cplx, 3>& e) {
  return 4.0 * (p - e[0]) * (p - e[1]) * (p - e[2]) * (2.0 * h - nu * nu * p / (2.0 * kPi * kPi));
}

/// Picks the root of S² nearest to ref; throws when the choice is ambiguous.
inline cplx oracle_branch(cplx s2, cplx ref) {
  const cplx s = std::sqrt(s2);
  const double d_same = std::abs(s - ref);
  const double d_flip = std::abs(s + ref);
  if (std::abs(s) < 1e-10 * (1.0 + std::abs(ref)) || std::min(d_same, d_flip) > 0.5 * std::max(d_same, d_flip)) {
    throw BranchPointOnPath("branch of sqrt is ambiguous along the quadrature path");
  }
  return d_same <= d_flip ? s : -s;
}

/// ½∫ dp/S along the straight segment pa → pb; S continued from s_start.
/// Returns the integral and the continued S at pb.
inline std::pair<cplx, cplx> oracle_segment(cplx pa, cplx pb, cplx s_start, cplx h, cplx nu,
                                            const std::array<cplx, 3>& e, int pieces, double tol) {
  cplx acc = 0.0;
  cplx s_ref = s_start;
  const cplx dp = pb - pa;
  for (int k = 0; k < pieces; ++k) {
    const double a = static_cast<double>(k) / pieces;
    const double b = static_cast<double>(k + 1) / pieces;
    const cplx s_end = oracle_branch(oracle_S2(pa + b * dp, h, nu, e), s_ref);
    // Interior nodes follow the secant between the two branch values.
    auto f = [&](double x) -> cplx {
      const double lam = (x - a) / (b - a);
      const cplx guess = (1.0 - lam) * s_ref + lam * s_end;
      const cplx s = oracle_branch(oracle_S2(pa + x * dp, h, nu, e), guess);
      return 0.5 * dp / s;
    };
    acc += integrate_gk(f, a, b, tol / pieces).value;
    s_ref = s_end;
  }
  return {acc, s_ref};
}

}  // namespace detail

/// t − t₀ for the rank-one PVI_ν motion from (u₀, v₀) to u₁ at energy h₂,
/// integrating along the straight segment ℘(2u₀) → ℘(2u₁).
inline cplx elliptic_time_oracle(cplx u0, cplx v0, cplx u1, cplx h2, const CriticalConfig& cfg,
                                 const EllipticContext& ctx, int pieces = 64, double tol = 1e-13) {
  if (pieces < 64) throw ValidationError("oracle needs at least 64 continuation steps");
  const auto w0 = wp_all(2.0 * u0, ctx);
  const cplx p1 = wp(2.0 * u1, ctx);
  if (u0 == u1 || p1 == w0.wp) return 0.0;
  const cplx s0 = w0.d1 * v0;
  return detail::oracle_segment(w0.wp, p1, s0, h2, cfg.nu, ctx.e_values(), pieces, tol).first;
}

/// As elliptic_time_oracle, but along the polygon through ℘(2u_k) for the
/// given positions; returns the cumulative times at each vertex.
inline std::vector<cplx> elliptic_time_oracle_path(const std::vector<cplx>& us, cplx v0, cplx h2,
                                                   const CriticalConfig& cfg, const EllipticContext& ctx,
                                                   int pieces = 64, double tol = 1e-13) {
  if (us.empty()) return {};
  std::vector<cplx> out{0.0};
  const auto w0 = wp_all(2.0 * us[0], ctx);
  cplx s = w0.d1 * v0;
  cplx p = w0.wp;
  cplx t = 0.0;
  for (std::size_t i = 1; i < us.size(); ++i) {
    const cplx pn = wp(2.0 * us[i], ctx);
    if (pn != p) {
      const auto [dt, s_end] = detail::oracle_segment(p, pn, s, h2, cfg.nu, ctx.e_values(), pieces, tol);
      t += dt;
      s = s_end;
      p = pn;
    }
    out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling limit κ → 0
//
// With τ = τ₀ + κt the level-κ elliptic flow becomes du/dt = v,
// dv/dt = ∂_u U(u|τ₀ + κt); at κ = 0 it is the autonomous CI flow.

struct ScalingRow {
  double kappa;
  double deviation;  // sup over t ∈ [0, T] of max(|Δu|, |Δv|)
  double order;      // log(dev_prev/dev)/log(κ_prev/κ); NaN on the first row
};

inline RkResult rescaled_flow(cplx u0, cplx v0, double kappa, const ModelParams& p, cplx tau0, double T,
                              std::span<const double> times, double rtol, double atol) {
  auto f = [&](double t, const VecC& y) -> VecC {
    const EllipticContext ctx(tau0 + kappa * t);
    VecC out(2);
    out << y[1], potential_dU(y[0], ctx, p);
    return out;
  };
  VecC y0(2);
  y0 << u0, v0;
  RkOptions opt;
  opt.rtol = rtol;
  opt.atol = atol;
  return rk_adaptive(f, y0, 0.0, T, opt, times);
}

inline std::vector<ScalingRow> scaling_limit_compare(const std::vector<double>& kappas, cplx u0, cplx v0,
                                                     const CriticalConfig& cfg, double T = 1.0, int samples = 101,
                                                     double rtol = 1e-12, double atol = 1e-14) {
  cfg.validate();
  for (double k : kappas) {
    if (!(k > 0.0 && k <= 0.2)) throw ValidationError("kappa values must lie in (0, 0.2]");
  }
  std::vector<double> times;
  for (int i = 0; i < samples; ++i) times.push_back(T * i / (samples - 1));
  const ModelParams p = cfg.model();
  const auto ref = rescaled_flow(u0, v0, 0.0, p, cfg.tau0, T, times, rtol, atol);
  std::vector<ScalingRow> rows;
  for (double k : kappas) {
    const auto run = rescaled_flow(u0, v0, k, p, cfg.tau0, T, times, rtol, atol);
    double dev = 0.0;
    for (std::size_t i = 0; i < run.y.size(); ++i) {
      dev = std::max(dev, (run.y[i] - ref.y[i]).cwiseAbs().maxCoeff());
    }
    double order = std::nan("");
    if (!rows.empty() && rows.back().deviation > 0.0 && dev > 0.0) {
      order = std::log(rows.back().deviation / dev) / std::log(rows.back().kappa / k);
    }
    rows.push_back({k, dev, order});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Critical-level Lax pair (L, κM) at τ = τ₀

inline LaxParams critical_lax_params(const CriticalConfig& cfg) {
  LaxParams lp;
  lp.nu = cfg.nu;
  lp.tau0 = cfg.tau0;
  lp.kappa = 0.0;
  lp.critical = true;
  return lp;
}

/// (b₁, …, b_N) of the critical L(w) for a Calogero state at τ₀.
inline VecC critical_spectral_invariants(const VecC& u, const VecC& v, cplx w, const CriticalConfig& cfg,
                                         const EllipticContext& ctx) {
  PhaseState s;
  s.u = u;
  s.v = v;
  s.tau = cfg.tau0;
  return char_poly_coeffs(build_L(s, w, critical_lax_params(cfg), ctx).L);
}

}  // namespace pvi
