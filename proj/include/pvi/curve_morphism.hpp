#pragma once

// The map (u, τ) ↦ (X, Y, t) from the Weierstrass torus to the Legendre
// family Y² = X(X−1)(X−t), its local inverse, and pushforward of elliptic
// trajectories to solutions X(t) of rational PVI.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/painleve_models.hpp"
#include "pvi/special_functions.hpp"

namespace pvi {

struct RationalPoint {
  cplx X;
  cplx Y;
  cplx t;
};

/// t = (e₃ − e₁)/(e₂ − e₁).
inline cplx t_of_tau(const EllipticContext& ctx) {
  const auto& e = ctx.e_values();
  const cplx d = e[1] - e[0];
  if (std::abs(d) < 1e-12) throw DegenerateCurve("e2 - e1 below 1e-12");
  return (e[2] - e[0]) / d;
}

/// X = (℘(u) − e₁)/(e₂ − e₁), Y = ½(e₂ − e₁)^{−3/2} ℘′(u).
inline RationalPoint uniformize(cplx u, const EllipticContext& ctx) {
  const auto& e = ctx.e_values();
  const cplx d = e[1] - e[0];
  if (std::abs(d) < 1e-12) throw DegenerateCurve("e2 - e1 below 1e-12");
  const auto w = wp_all(u, ctx);
  return {(w.wp - e[0]) / d, 0.5 * std::pow(d, -1.5) * w.d1, (e[2] - e[0]) / d};
}

/// Solves ℘(u) = e₁ + (e₂ − e₁)X by Newton iteration from a 12×12 grid of
/// seeds over the cell. Of the two solutions ±u the one whose ℘′ has the sign
/// `branch` (of its imaginary part, real part on ties) is returned, reduced
/// to the cell [−½,½) + [−½,½)τ.
inline cplx invert_uniformize(cplx X, const EllipticContext& ctx, int branch = 1) {
  if (!std::isfinite(X.real()) || !std::isfinite(X.imag())) throw ValidationError("X must be finite");
  const auto& e = ctx.e_values();
  const cplx target = e[0] + (e[1] - e[0]) * X;
  const double tol = 1e-13 * std::max(1.0, std::abs(target));
  const cplx tau = ctx.tau();
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      cplx u = (i + 0.5) / 12.0 + (j + 0.5) / 12.0 * tau;
      bool ok = false;
      for (int it = 0; it < 50; ++it) {
        if (lattice_distance(u, tau) < 1e-6) break;
        const auto [p, p1] = ctx.wp_reduced(u);
        const cplx r = p - target;
        if (std::abs(r) <= tol) {
          ok = true;
          break;
        }
        if (std::abs(p1) == 0.0) break;
        cplx step = r / p1;
        // Damp steps that would jump across the cell.
        if (std::abs(step) > 0.25) step *= 0.25 / std::abs(step);
        u -= step;
      }
      if (!ok) continue;
      const auto [p, p1] = ctx.wp_reduced(u);
      const double scale = std::max(1.0, std::abs(p1));
      int sign;
      if (std::abs(p1.imag()) > 1e-9 * scale) {
        sign = p1.imag() > 0 ? 1 : -1;
      } else {
        sign = p1.real() >= 0 ? 1 : -1;
      }
      if (sign != (branch >= 0 ? 1 : -1)) u = -u;
      return detail::reduce_to_cell(u, tau).z;
    }
  }
  throw NoConvergence("inverse of the uniformization failed from every seed");
}

/// Residual of the rational equation at (t, X, X', X'') relative to the
/// largest of its terms.
struct RationalResidual {
  double abs;
  double scale;
  double rel;
};

inline RationalResidual rational_pvi_residual(cplx X, cplx Xd, cplx Xdd, cplx t, const RationalConstants& c) {
  const cplx x1 = X - 1.0, xt = X - t, t1 = t - 1.0;
  const cplx first = 0.5 * (1.0 / X + 1.0 / x1 + 1.0 / xt) * Xd * Xd;
  const cplx second = (1.0 / t + 1.0 / t1 + 1.0 / xt) * Xd;
  const cplx pref = X * x1 * xt / (t * t * t1 * t1);
  const std::array<cplx, 4> br = {c.alpha, c.beta * t / (X * X), c.gamma * t1 / (x1 * x1),
                                  c.delta * t * t1 / (xt * xt)};
  double scale = std::max({std::abs(Xdd), std::abs(first), std::abs(second)});
  for (const cplx& b : br) scale = std::max(scale, std::abs(pref * b));
  const double a = std::abs(Xdd - pvi_rational_rhs(X, Xd, t, c));
  return {a, scale, scale > 0.0 ? a / scale : a};
}

struct RationalTrajectory {
  std::vector<double> s;
  std::vector<cplx> tau;
  std::vector<cplx> t;
  std::vector<cplx> X;
  std::vector<cplx> dXdt;
  std::vector<cplx> d2Xdt2;
};

namespace detail {

// Richardson-extrapolated first and second central differences at sample i
// on a uniform grid of spacing h. Throws when the h and 2h estimates of the
// first derivative disagree beyond rel_tol.
struct Derivs {
  cplx d1;
  cplx d2;
};

inline Derivs richardson_derivs(const std::vector<cplx>& f, std::size_t i, double h, double rel_tol,
                                double scale1) {
  const cplx a1 = (f[i + 1] - f[i - 1]) / (2.0 * h);
  const cplx b1 = (f[i + 2] - f[i - 2]) / (4.0 * h);
  const cplx a2 = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
  const cplx b2 = (f[i + 2] - 2.0 * f[i] + f[i - 2]) / (4.0 * h * h);
  const cplx d1 = (4.0 * a1 - b1) / 3.0;
  const cplx d2 = (4.0 * a2 - b2) / 3.0;
  if (std::abs(a1 - b1) > rel_tol * std::max(std::abs(d1), scale1)) {
    throw DerivativeUnstable("central differences at spacing h and 2h disagree");
  }
  return {d1, d2};
}

}  // namespace detail

/// Pushes an elliptic PVI trajectory sampled at equally spaced path
/// parameters along a straight τ-segment to (t, X, dX/dt, d²X/dt²). The two
/// samples at each end are dropped (the stencil needs ±2 neighbours).
inline RationalTrajectory pushforward_trajectory(const Trajectory& traj, double rel_tol = 1e-4) {
  const std::size_t n = traj.size();
  if (n < 5) throw ValidationError("pushforward needs at least five samples");
  if (traj.path.waypoints.size() != 2) throw ValidationError("pushforward needs a straight tau segment");
  const double h = traj[1].s - traj[0].s;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((traj[i].s - traj[i - 1].s) - h) > 1e-9 * h) {
      throw ValidationError("pushforward needs equally spaced samples");
    }
  }
  std::vector<cplx> X(n), t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const EllipticContext ctx(traj[i].state.tau);
    const auto rp = uniformize(traj[i].state.u[0], ctx);
    X[i] = rp.X;
    t[i] = rp.t;
  }
  auto mean_abs_slope = [&](const std::vector<cplx>& f) {
    return std::abs(f.back() - f.front()) / (traj[n - 1].s - traj[0].s) + 1e-300;
  };
  const double sx = 1e-6 * mean_abs_slope(X);
  const double st = 1e-6 * mean_abs_slope(t);

  RationalTrajectory out;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const auto dx = detail::richardson_derivs(X, i, h, rel_tol, sx);
    const auto dt = detail::richardson_derivs(t, i, h, rel_tol, st);
    if (std::abs(dt.d1) == 0.0) throw DerivativeUnstable("dt/dtau vanishes");
    out.s.push_back(traj[i].s);
    out.tau.push_back(traj[i].state.tau);
    out.t.push_back(t[i]);
    out.X.push_back(X[i]);
    out.dXdt.push_back(dx.d1 / dt.d1);
    out.d2Xdt2.push_back((dx.d2 * dt.d1 - dx.d1 * dt.d2) / (dt.d1 * dt.d1 * dt.d1));
  }
  return out;
}

/// Pointwise rational residuals of a pushed-forward trajectory.
inline std::vector<RationalResidual> pushforward_residuals(const RationalTrajectory& rt, const RationalConstants& c) {
  std::vector<RationalResidual> out;
  for (std::size_t i = 0; i < rt.X.size(); ++i) {
    out.push_back(rational_pvi_residual(rt.X[i], rt.dXdt[i], rt.d2Xdt2[i], rt.t[i], c));
  }
  return out;
}

}  // namespace pvi
