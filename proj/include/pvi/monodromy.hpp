#pragma once

// Parallel transport of the linear system
//   ∂_w Ψ = −A_w Ψ,  ∂_w̄ Ψ = −A_w̄ Ψ,  A_w = L/κ,  A_w̄ = L̄ − (μ/κ) L,
// around the fundamental cycles of the torus, and the drift of the cycle
// invariants along a trajectory.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/integrators.hpp"
#include "pvi/lax_system.hpp"
#include "pvi/painleve_models.hpp"
#include "pvi/special_functions.hpp"

namespace pvi {

inline constexpr double kDetourRadius = 1e-2;
inline constexpr double kControlSide = 0.05;
inline constexpr double kControlGate = 1e-8;

inline ConnectionPair connection_at(const PhaseState& s, cplx w, const LaxParams& lp, const EllipticContext& ctx) {
  const MatC L = build_L(s, w, lp, ctx).L;
  const cplx mu = mu_beltrami(s.tau, lp);
  MatC awb = -(mu / lp.kappa) * L;
  awb.diagonal() += lbar_diag(s, lp);
  return {L / lp.kappa, awb};
}

/// Period of the B-cycle in the w coordinate: τ₀ in the reference frame.
inline cplx b_period(cplx tau, const LaxParams& lp) {
  return lp.exponent_frame == ExponentFrame::REFERENCE_TAU0 ? lp.tau0 : tau;
}

/// Straight segment a → b with rectangular detours around every lattice
/// point (period τ_l) closer than `radius`; the detour keeps a distance of at
/// least `radius`.
inline std::vector<cplx> detour_segment(cplx a, cplx b, cplx tau_l, double radius = kDetourRadius) {
  const cplx d = (b - a) / std::abs(b - a);
  const cplx nrm = kI * d;
  const double len = std::abs(b - a);
  struct Hit {
    double t;
    double side;
  };
  std::vector<Hit> hits;
  const double reach = std::abs(a) + std::abs(b) + 2.0;
  const int mmax = static_cast<int>(std::ceil(reach)) + 1;
  const int nmax = static_cast<int>(std::ceil(reach / tau_l.imag())) + 1;
  for (int m = -mmax; m <= mmax; ++m) {
    for (int n = -nmax; n <= nmax; ++n) {
      const cplx c = static_cast<double>(m) + static_cast<double>(n) * tau_l;
      const cplx rel = (c - a) / d;  // along-segment coordinate in real part
      const double t = rel.real();
      const double off = rel.imag();
      if (t < -radius || t > len + radius) continue;
      if (std::abs(off) >= radius) continue;
      hits.push_back({t, off >= 0.0 ? -1.0 : 1.0});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& x, const Hit& y) { return x.t < y.t; });
  std::vector<cplx> pts{a};
  for (const Hit& h : hits) {
    const double t0 = std::max(h.t - 2.0 * radius, 0.0);
    const double t1 = std::min(h.t + 2.0 * radius, len);
    const cplx o = 2.0 * radius * h.side * nrm;
    if (t0 > 0.0) pts.push_back(a + t0 * d);
    pts.push_back(a + t0 * d + o);
    pts.push_back(a + t1 * d + o);
    if (t1 < len) pts.push_back(a + t1 * d);
  }
  pts.push_back(b);
  std::vector<cplx> out;
  for (const cplx& p : pts) {
    if (out.empty() || std::abs(p - out.back()) > 1e-15) out.push_back(p);
  }
  return out;
}

inline MatC transport_along(const PhaseState& s, const std::vector<cplx>& pts, const LaxParams& lp,
                            const EllipticContext& ctx, double rtol = kTransportRtol, double atol = kTransportAtol) {
  const PathSpec path = make_w_path(pts, rtol, atol);
  return linear_transport([&](cplx w) { return connection_at(s, w, lp, ctx); }, path, s.size());
}

struct MonodromyReport {
  cplx w0;
  cplx tau;
  MatC MA;
  MatC MB;
  cplx trace_A, trace_B, det_A, det_B;
  double control_deviation = 0.0;  // max |T_loop − I| over the control square
  cplx commutator_trace;           // tr(M_A M_B M_A⁻¹ M_B⁻¹)
  double rtol = kTransportRtol;
  double atol = kTransportAtol;
  std::string convention;
  bool calibrated = true;
};

inline cplx default_basepoint(const LaxParams& lp, cplx tau) { return 0.37 + 0.29 * b_period(tau, lp); }

inline MonodromyReport cycle_monodromies(const PhaseState& s, const LaxParams& lp, const EllipticContext& ctx,
                                         std::optional<cplx> w0_opt = std::nullopt,
                                         double rtol = kTransportRtol, double atol = kTransportAtol) {
  lp.validate();
  const cplx tb = b_period(s.tau, lp);
  const cplx w0 = w0_opt.value_or(default_basepoint(lp, s.tau));
  MonodromyReport r;
  r.w0 = w0;
  r.tau = s.tau;
  r.rtol = rtol;
  r.atol = atol;
  r.convention = lp.convention_tag();
  r.MA = transport_along(s, detour_segment(w0, w0 + 1.0, tb), lp, ctx, rtol, atol);
  r.MB = transport_along(s, detour_segment(w0, w0 + tb, tb), lp, ctx, rtol, atol);
  r.trace_A = r.MA.trace();
  r.trace_B = r.MB.trace();
  r.det_A = r.MA.determinant();
  r.det_B = r.MB.determinant();
  if (!std::isfinite(std::abs(r.det_A)) || !std::isfinite(std::abs(r.det_B)) || std::abs(r.det_A) == 0.0 ||
      std::abs(r.det_B) == 0.0) {
    throw NonFinite("degenerate monodromy matrix");
  }
  const double c = kControlSide;
  const std::vector<cplx> square = {w0, w0 + c, w0 + cplx(c, c), w0 + cplx(0, c), w0};
  const MatC T = transport_along(s, square, lp, ctx, rtol, atol);
  r.control_deviation = (T - MatC::Identity(s.size(), s.size())).cwiseAbs().maxCoeff();
  r.calibrated = r.control_deviation <= kControlGate;
  r.commutator_trace = (r.MA * r.MB * r.MA.inverse() * r.MB.inverse()).trace();
  return r;
}

struct DriftRow {
  double s;
  cplx tau;
  cplx trace_A, trace_B, det_A, det_B;
  double control_deviation;
};

struct DriftTable {
  std::vector<DriftRow> rows;
  double drift_trace_A = 0.0;
  double drift_trace_B = 0.0;
  double drift_det_A = 0.0;
  double drift_det_B = 0.0;
  double max_control_deviation = 0.0;
  bool calibrated = true;  // false: some control loop exceeded 1e-8 (UNCALIBRATED)
  std::string convention;
};

/// Cycle invariants at every trajectory sample, with the basepoint fixed on
/// the reference torus. Drift is measured relative to the first sample.
inline DriftTable isomonodromy_drift(const Trajectory& traj, const LaxParams& lp,
                                     std::optional<cplx> w0 = std::nullopt, double rtol = kTransportRtol,
                                     double atol = kTransportAtol) {
  if (traj.size() == 0) throw ValidationError("empty trajectory");
  DriftTable t;
  t.convention = lp.convention_tag();
  const cplx base = w0.value_or(default_basepoint(lp, traj[0].state.tau));
  auto rel = [](cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const EllipticContext ctx(traj[i].state.tau);
    const auto r = cycle_monodromies(traj[i].state, lp, ctx, base, rtol, atol);
    t.rows.push_back({traj[i].s, traj[i].state.tau, r.trace_A, r.trace_B, r.det_A, r.det_B, r.control_deviation});
    t.max_control_deviation = std::max(t.max_control_deviation, r.control_deviation);
    const DriftRow& f = t.rows.front();
    t.drift_trace_A = std::max(t.drift_trace_A, rel(r.trace_A, f.trace_A));
    t.drift_trace_B = std::max(t.drift_trace_B, rel(r.trace_B, f.trace_B));
    t.drift_det_A = std::max(t.drift_det_A, rel(r.det_A, f.det_A));
    t.drift_det_B = std::max(t.drift_det_B, rel(r.det_B, f.det_B));
  }
  t.calibrated = t.max_control_deviation <= kControlGate;
  return t;
}

}  // namespace pvi
