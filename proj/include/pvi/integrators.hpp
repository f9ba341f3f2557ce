#pragma once

// Numerical engines shared by the flows: an embedded Dormand–Prince 5(4)
// integrator for complex ODEs along piecewise-linear paths, a kick-drift-kick
// leapfrog for autonomous Hamiltonian systems, and parallel transport of a
// matrix connection.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/special_functions.hpp"

namespace pvi {

using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;

/// Piecewise-linear path through complex waypoints, parametrised by the
/// arc-length fraction s ∈ [0, 1].
struct PathSpec {
  std::vector<cplx> waypoints;
  double max_step = std::numeric_limits<double>::infinity();  // in s
  double rtol = 1e-10;
  double atol = 1e-12;
  bool is_tau_path = true;

  void validate() const {
    if (waypoints.size() < 2) throw ValidationError("path needs at least two waypoints");
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      const cplx w = waypoints[i];
      if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) {
        throw ValidationError("path waypoint is not finite");
      }
      if (is_tau_path && !(w.imag() > kMinImTau)) {
        throw ValidationError("tau-path waypoint must have Im > 0.05");
      }
      if (i > 0 && waypoints[i] == waypoints[i - 1]) {
        throw ValidationError("consecutive path waypoints coincide");
      }
    }
    if (!(rtol > 0.0) || !(atol > 0.0) || !(max_step > 0.0)) {
      throw ValidationError("path tolerances and max_step must be positive");
    }
  }

  double length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) len += std::abs(waypoints[i] - waypoints[i - 1]);
    return len;
  }

  /// s-values of interior waypoints.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    const double total = length();
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < waypoints.size(); ++i) {
      acc += std::abs(waypoints[i] - waypoints[i - 1]);
      out.push_back(acc / total);
    }
    return out;
  }

  /// Point and derivative d(point)/ds at s.
  std::pair<cplx, cplx> at(double s) const {
    const double total = length();
    double target = std::clamp(s, 0.0, 1.0) * total;
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      const cplx d = waypoints[i] - waypoints[i - 1];
      const double seg = std::abs(d);
      if (target <= seg || i + 1 == waypoints.size()) {
        return {waypoints[i - 1] + d * (target / seg), d / seg * total};
      }
      target -= seg;
    }
    return {waypoints.back(), 0.0};
  }

  cplx point(double s) const { return at(s).first; }
};

struct RkOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;  // 0: automatic
  double safety = 0.9;
  long max_steps = 5'000'000;
  /// Called with the last accepted (s, y) before any exception leaves the integrator.
  std::function<void(double, const VecC&)> on_abort;
};

struct RkResult {
  std::vector<double> s;
  std::vector<VecC> y;
  long accepted_steps = 0;
  long rejected_steps = 0;
};

namespace detail {

inline bool all_finite(const VecC& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  }
  return true;
}

// Dormand–Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates dy/ds = f(s, y) from s0 to s1 with the Dormand–Prince 5(4) pair
/// and a PI step controller. The max-norm local error per step is kept below
/// atol + rtol·|y| componentwise.
///
/// Every entry of `sample_points` is hit exactly as a step endpoint and
/// recorded; `breakpoints` are hit but not recorded. With no sample points,
/// every accepted step is recorded. s0 is always recorded first.
template <class F>
RkResult rk_adaptive(F&& f, VecC y0, double s0, double s1, const RkOptions& opt,
                     std::span<const double> sample_points = {},
                     std::span<const double> breakpoints = {}) {
  using T = detail::Dopri5;
  RkResult out;
  const double span = s1 - s0;
  const double dir = span >= 0.0 ? 1.0 : -1.0;
  const double abs_span = std::abs(span);

  std::vector<double> stops;
  for (double v : breakpoints) stops.push_back(v);
  for (double v : sample_points) stops.push_back(v);
  stops.push_back(s1);
  std::erase_if(stops, [&](double v) { return dir * (v - s0) <= 0.0 || dir * (v - s1) > 0.0; });
  std::sort(stops.begin(), stops.end(), [&](double a, double b) { return dir * a < dir * b; });
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  auto is_sample = [&](double v) {
    if (sample_points.empty()) return true;
    return std::find(sample_points.begin(), sample_points.end(), v) != sample_points.end();
  };

  double s = s0;
  VecC y = std::move(y0);
  auto abort_with = [&](auto&& err) {
    if (opt.on_abort) opt.on_abort(s, y);
    throw err;
  };

  VecC k1;
  try {
    k1 = f(s, y);
  } catch (...) {
    if (opt.on_abort) opt.on_abort(s, y);
    throw;
  }
  if (!detail::all_finite(y) || !detail::all_finite(k1)) abort_with(NonFinite("initial state or derivative"));

  out.s.push_back(s);
  out.y.push_back(y);
  if (abs_span == 0.0) return out;

  double h = opt.initial_step;
  if (h <= 0.0) {
    const double yn = std::max(y.cwiseAbs().maxCoeff(), opt.atol / std::max(opt.rtol, 1e-300));
    const double fn = k1.size() ? k1.cwiseAbs().maxCoeff() : 0.0;
    h = fn > 0.0 ? 0.01 * yn / fn : 0.01 * abs_span;
    h = std::clamp(h, 1e-6 * abs_span, 0.1 * abs_span);
  }
  h = std::min(h, opt.max_step);

  double err_old = 1e-4;
  bool last_rejected = false;
  std::size_t stop_idx = 0;
  const double h_min = 1e-12 * abs_span;

  while (stop_idx < stops.size()) {
    if (out.accepted_steps + out.rejected_steps > opt.max_steps) {
      abort_with(StepUnderflow("step budget exhausted at s = " + std::to_string(s)));
    }
    const double target = stops[stop_idx];
    double step = std::min(h, opt.max_step);
    bool lands = false;
    if (step >= dir * (target - s) * (1.0 - 1e-12)) {
      step = dir * (target - s);
      lands = true;
    }
    const double hs = dir * step;

    VecC k2, k3, k4, k5, k6, k7, y_new;
    try {
      k2 = f(s + T::c2 * hs, y + hs * (T::a21 * k1));
      k3 = f(s + T::c3 * hs, y + hs * (T::a31 * k1 + T::a32 * k2));
      k4 = f(s + T::c4 * hs, y + hs * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
      k5 = f(s + T::c5 * hs, y + hs * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
      k6 = f(s + hs, y + hs * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5));
      y_new = y + hs * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 + T::a76 * k6);
      k7 = f(s + hs, y_new);
    } catch (const NumericalError&) {
      // A trial stage hit a singular set; retry with a smaller step.
      h = 0.25 * step;
      ++out.rejected_steps;
      last_rejected = true;
      if (h < h_min) {
        if (opt.on_abort) opt.on_abort(s, y);
        throw;
      }
      continue;
    }

    const VecC err_vec =
        hs * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    double err = 0.0;
    bool finite = detail::all_finite(y_new) && detail::all_finite(k7);
    if (finite) {
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        err = std::max(err, std::abs(err_vec[i]) / sc);
      }
    }
    if (!finite || !std::isfinite(err)) {
      h = 0.25 * step;
      ++out.rejected_steps;
      last_rejected = true;
      if (h < h_min) abort_with(NonFinite("non-finite state near s = " + std::to_string(s)));
      continue;
    }

    if (err <= 1.0) {
      s = lands ? target : s + hs;
      y = std::move(y_new);
      k1 = std::move(k7);
      ++out.accepted_steps;
      if (lands) {
        if (is_sample(target) || target == s1) {
          if (!(out.s.size() && out.s.back() == s)) {
            out.s.push_back(s);
            out.y.push_back(y);
          }
        }
        ++stop_idx;
      } else if (sample_points.empty()) {
        out.s.push_back(s);
        out.y.push_back(y);
      }
      double fac = opt.safety * std::pow(std::max(err, 1e-10), -0.7 / 5.0) * std::pow(err_old, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      // Landing steps are truncated; grow from the controller's own step.
      h = std::max(step, lands ? h : step) * fac;
      err_old = std::max(err, 1e-4);
      last_rejected = false;
    } else {
      h = step * std::max(0.2, opt.safety * std::pow(err, -0.2));
      ++out.rejected_steps;
      last_rejected = true;
    }
    if (h < h_min && stop_idx < stops.size()) {
      abort_with(StepUnderflow("step below 1e-12 of path length at s = " + std::to_string(s) +
                               " (movable pole suspected)"));
    }
  }
  return out;
}

/// Integrates dy/dτ = f(τ, y) along a τ- (or w-) path. Returns samples at the
/// requested path parameters s ∈ [0, 1] (all accepted steps when empty).
template <class F>
RkResult integrate_path(F&& f, VecC y0, const PathSpec& path, std::span<const double> sample_s = {},
                        std::function<void(double, const VecC&)> on_abort = {}) {
  path.validate();
  RkOptions opt;
  opt.rtol = path.rtol;
  opt.atol = path.atol;
  opt.max_step = path.max_step;
  opt.on_abort = std::move(on_abort);
  const auto bps = path.breakpoints();
  auto g = [&](double s, const VecC& y) -> VecC {
    const auto [p, dp] = path.at(s);
    return f(p, y) * dp;
  };
  return rk_adaptive(g, std::move(y0), 0.0, 1.0, opt, sample_s, bps);
}

struct LeapfrogResult {
  std::vector<double> t;
  std::vector<VecC> q;
  std::vector<VecC> p;
};

/// Kick-drift-kick leapfrog for H = p²/2 + V(q) with force −∇V. Symmetric and
/// second order; running with −dt retraces a forward run.
template <class Force>
LeapfrogResult leapfrog(Force&& force, VecC q0, VecC p0, double dt, long nsteps, long record_every = 1) {
  if (!(dt != 0.0) || !std::isfinite(dt)) throw ValidationError("leapfrog dt must be finite and nonzero");
  if (nsteps < 0 || record_every < 1) throw ValidationError("leapfrog step counts invalid");
  LeapfrogResult out;
  VecC q = std::move(q0);
  VecC p = std::move(p0);
  VecC F = force(q);
  if (!detail::all_finite(F)) throw NonFinite("force at initial point");
  out.t.push_back(0.0);
  out.q.push_back(q);
  out.p.push_back(p);
  for (long i = 1; i <= nsteps; ++i) {
    p += 0.5 * dt * F;
    q += dt * p;
    F = force(q);
    p += 0.5 * dt * F;
    if (!detail::all_finite(q) || !detail::all_finite(p)) {
      throw NonFinite("leapfrog state at step " + std::to_string(i));
    }
    if (i % record_every == 0 || i == nsteps) {
      out.t.push_back(static_cast<double>(i) * dt);
      out.q.push_back(q);
      out.p.push_back(p);
    }
  }
  return out;
}

/// (A_w, A_w̄) at a point of the torus.
using ConnectionPair = std::pair<MatC, MatC>;

/// Solves dΨ/ds = −[A_w(w(s)) ẇ + A_w̄(w(s)) conj(ẇ)] Ψ with Ψ(0) = I and
/// returns Ψ(1). Transport along γ₁ then γ₂ composes as T(γ₂)·T(γ₁).
template <class Connection>
MatC linear_transport(Connection&& connection, const PathSpec& path, Eigen::Index dim) {
  PathSpec p = path;
  p.is_tau_path = false;
  p.validate();
  RkOptions opt;
  opt.rtol = p.rtol;
  opt.atol = p.atol;
  opt.max_step = p.max_step;
  const auto bps = p.breakpoints();
  auto f = [&](double s, const VecC& y) -> VecC {
    const auto [w, dw] = p.at(s);
    const auto [aw, awb] = connection(w);
    const MatC gen = aw * dw + awb * std::conj(dw);
    Eigen::Map<const MatC> psi(y.data(), dim, dim);
    MatC d = -gen * psi;
    return Eigen::Map<const VecC>(d.data(), dim * dim);
  };
  MatC id = MatC::Identity(dim, dim);
  VecC y0 = Eigen::Map<const VecC>(id.data(), dim * dim);
  const double end[] = {1.0};
  auto res = rk_adaptive(f, std::move(y0), 0.0, 1.0, opt, end, bps);
  return Eigen::Map<const MatC>(res.y.back().data(), dim, dim);
}

/// Default transport tolerances (rtol, atol).
inline constexpr double kTransportRtol = 1e-10;
inline constexpr double kTransportAtol = 1e-13;

inline PathSpec make_w_path(std::vector<cplx> pts, double rtol = kTransportRtol, double atol = kTransportAtol) {
  PathSpec p;
  p.waypoints = std::move(pts);
  p.rtol = rtol;
  p.atol = atol;
  p.is_tau_path = false;
  return p;
}

}  // namespace pvi
