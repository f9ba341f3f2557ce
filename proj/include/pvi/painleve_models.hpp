#pragma once

// Painlevé VI in rational and elliptic form, the N-component elliptic flow,
// their Hamiltonians, the parameter map between the two pictures and the
// lattice/modular actions on phase variables.
//
// Flows at level κ:
//   du/dτ = v/κ,   dv/dτ = F(u|τ)/κ,
// with F = ∂_u U for elliptic PVI and F_j = ν²/(2πi)² Σ_{k≠j} ℘'(u_j − u_k)
// for the N-component system. κ = 1 is the plain d²u/dτ² = ∂_u U.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/integrators.hpp"
#include "pvi/special_functions.hpp"

namespace pvi {

/// (α, β, γ, δ) of the rational equation.
struct RationalConstants {
  cplx alpha{}, beta{}, gamma{}, delta{};
};

/// (α₀, α₁, α₂, α₃) = (α, −β, γ, ½ − δ).
inline std::array<cplx, 4> param_map(const RationalConstants& r) {
  return {r.alpha, -r.beta, r.gamma, 0.5 - r.delta};
}

inline RationalConstants param_map_inverse(const std::array<cplx, 4>& a) {
  return {a[0], -a[1], a[2], 0.5 - a[3]};
}

class ModelParams {
 public:
  ModelParams() = default;

  static ModelParams from_rational(const RationalConstants& r) {
    ModelParams p;
    p.rational_ = r;
    p.alpha_vec_ = param_map(r);
    return p;
  }

  static ModelParams from_elliptic(const std::array<cplx, 4>& weights) {
    ModelParams p;
    p.alpha_vec_ = weights;
    p.rational_ = param_map_inverse(weights);
    return p;
  }

  /// PVI_ν: α_j = ν²/4 for all j; ν is also the N-component coupling.
  static ModelParams pvi_nu(cplx nu, double kappa = 1.0) {
    const cplx a = nu * nu / 4.0;
    ModelParams p = from_elliptic({a, a, a, a});
    p.nu_ = nu;
    p.set_kappa(kappa);
    return p;
  }

  ModelParams& set_nu(cplx nu) {
    nu_ = nu;
    return *this;
  }

  ModelParams& set_kappa(double kappa) {
    if (!(kappa != 0.0) || !std::isfinite(kappa)) throw ValidationError("kappa must be finite and nonzero");
    kappa_ = kappa;
    return *this;
  }

  cplx alpha() const noexcept { return rational_.alpha; }
  cplx beta() const noexcept { return rational_.beta; }
  cplx gamma() const noexcept { return rational_.gamma; }
  cplx delta() const noexcept { return rational_.delta; }
  const RationalConstants& rational() const noexcept { return rational_; }
  const std::array<cplx, 4>& alpha_vec() const noexcept { return alpha_vec_; }
  cplx nu() const noexcept { return nu_; }
  double kappa() const noexcept { return kappa_; }

 private:
  RationalConstants rational_{0.0, 0.0, 0.0, 0.5};
  std::array<cplx, 4> alpha_vec_{};
  cplx nu_{0.0};
  double kappa_ = 1.0;
};

struct PhaseState {
  VecC u;
  VecC v;
  cplx tau{0.0, 1.0};
  bool centered = false;

  Eigen::Index size() const noexcept { return u.size(); }

  void validate() const {
    if (u.size() < 1 || u.size() != v.size()) throw ValidationError("u and v must have equal length >= 1");
    if (!detail::all_finite(u) || !detail::all_finite(v)) throw ValidationError("state is not finite");
    if (!(tau.imag() > 0.0)) throw ValidationError("tau must lie in the upper half plane");
    if (centered && (std::abs(u.sum()) > 1e-12 || std::abs(v.sum()) > 1e-12)) {
      throw ValidationError("centered state must have sum u = sum v = 0");
    }
  }

  static PhaseState scalar(cplx u, cplx v, cplx tau) {
    PhaseState s;
    s.u = VecC::Constant(1, u);
    s.v = VecC::Constant(1, v);
    s.tau = tau;
    return s;
  }
};

struct PhaseDerivative {
  VecC du;
  VecC dv;
};

// ---------------------------------------------------------------------------
// Rational PVI

/// d²X/dt² of the rational sixth Painlevé equation.
inline cplx pvi_rational_rhs(cplx X, cplx Xdot, cplx t, const RationalConstants& c) {
  const cplx d[] = {X, X - 1.0, X - t, t, t - 1.0};
  for (const cplx& v : d) {
    if (std::abs(v) < 1e-12) throw SingularPoint("rational PVI denominator below 1e-12");
  }
  const cplx x1 = X - 1.0, xt = X - t, t1 = t - 1.0;
  const cplx first = 0.5 * (1.0 / X + 1.0 / x1 + 1.0 / xt) * Xdot * Xdot;
  const cplx second = (1.0 / t + 1.0 / t1 + 1.0 / xt) * Xdot;
  const cplx pref = X * x1 * xt / (t * t * t1 * t1);
  const cplx bracket = c.alpha + c.beta * t / (X * X) + c.gamma * t1 / (x1 * x1) + c.delta * t * t1 / (xt * xt);
  return first - second + pref * bracket;
}

inline cplx pvi_rational_rhs(cplx X, cplx Xdot, cplx t, const ModelParams& p) {
  return pvi_rational_rhs(X, Xdot, t, p.rational());
}

// ---------------------------------------------------------------------------
// Elliptic PVI

inline constexpr cplx kInvTwoPiISq = 1.0 / (kTwoPiI * kTwoPiI);  // −1/(4π²)

/// U(u|τ) = (2πi)⁻² Σ_j α_j ℘(u + T_j/2).
inline cplx potential_U(cplx u, const EllipticContext& ctx, const ModelParams& p) {
  const auto h = ctx.half_period_points();
  cplx acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    if (p.alpha_vec()[j] != 0.0) acc += p.alpha_vec()[j] * wp(u + h[j], ctx);
  }
  return kInvTwoPiISq * acc;
}

/// ∂_u U.
inline cplx potential_dU(cplx u, const EllipticContext& ctx, const ModelParams& p) {
  const auto h = ctx.half_period_points();
  cplx acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    if (p.alpha_vec()[j] != 0.0) acc += p.alpha_vec()[j] * wp_prime(u + h[j], ctx);
  }
  return kInvTwoPiISq * acc;
}

/// ∂²_u U.
inline cplx potential_d2U(cplx u, const EllipticContext& ctx, const ModelParams& p) {
  const auto h = ctx.half_period_points();
  cplx acc = 0.0;
  for (int j = 0; j < 4; ++j) {
    if (p.alpha_vec()[j] != 0.0) acc += p.alpha_vec()[j] * wp_all(u + h[j], ctx).d2;
  }
  return kInvTwoPiISq * acc;
}

inline PhaseDerivative pvi_elliptic_rhs(const PhaseState& s, const EllipticContext& ctx, const ModelParams& p) {
  if (s.size() != 1) throw ValidationError("elliptic PVI state must be scalar (N = 1)");
  PhaseDerivative d;
  d.du = s.v / p.kappa();
  d.dv = VecC::Constant(1, potential_dU(s.u[0], ctx, p) / p.kappa());
  return d;
}

inline cplx hamiltonian_elliptic(const PhaseState& s, const EllipticContext& ctx, const ModelParams& p) {
  return 0.5 * s.v[0] * s.v[0] - potential_U(s.u[0], ctx, p);
}

// ---------------------------------------------------------------------------
// N-component flow

namespace detail {
inline void check_collisions(const VecC& u, const EllipticContext& ctx) {
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    for (Eigen::Index k = j + 1; k < u.size(); ++k) {
      if (lattice_distance(u[j] - u[k], ctx.tau()) < kLatticeGuard) {
        throw ParticleCollision("u_" + std::to_string(j) + " - u_" + std::to_string(k) +
                                " within 1e-8 of the lattice");
      }
    }
  }
}
}  // namespace detail

/// F_j = ν²/(2πi)² Σ_{k≠j} ℘'(u_j − u_k).
inline VecC multicomponent_force(const VecC& u, const EllipticContext& ctx, cplx nu) {
  detail::check_collisions(u, ctx);
  const Eigen::Index n = u.size();
  VecC f = VecC::Zero(n);
  const cplx c = nu * nu * kInvTwoPiISq;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      const cplx d = c * ctx.wp_reduced(u[j] - u[k]).second;
      f[j] += d;
      f[k] -= d;
    }
  }
  return f;
}

inline PhaseDerivative multicomponent_rhs(const PhaseState& s, const EllipticContext& ctx, const ModelParams& p) {
  PhaseDerivative d;
  d.du = s.v / p.kappa();
  d.dv = multicomponent_force(s.u, ctx, p.nu()) / p.kappa();
  return d;
}

/// −ν²/(2πi)² Σ_{j<k} ℘(u_j − u_k), the potential part of H.
inline cplx multicomponent_potential(const VecC& u, const EllipticContext& ctx, cplx nu) {
  detail::check_collisions(u, ctx);
  cplx acc = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    for (Eigen::Index k = j + 1; k < u.size(); ++k) acc += ctx.wp_reduced(u[j] - u[k]).first;
  }
  return -nu * nu * kInvTwoPiISq * acc;
}

inline cplx hamiltonian_multi(const PhaseState& s, const EllipticContext& ctx, const ModelParams& p) {
  return 0.5 * (s.v.array() * s.v.array()).sum() + multicomponent_potential(s.u, ctx, p.nu());
}

// ---------------------------------------------------------------------------
// Flows along τ-paths

enum class FlowModel { Elliptic, Multicomponent };

inline PhaseDerivative flow_rhs(FlowModel m, const PhaseState& s, const EllipticContext& ctx, const ModelParams& p) {
  return m == FlowModel::Elliptic ? pvi_elliptic_rhs(s, ctx, p) : multicomponent_rhs(s, ctx, p);
}

inline cplx flow_hamiltonian(FlowModel m, const PhaseState& s, const EllipticContext& ctx, const ModelParams& p) {
  return m == FlowModel::Elliptic ? hamiltonian_elliptic(s, ctx, p) : hamiltonian_multi(s, ctx, p);
}

/// ∂H/∂τ at frozen (u, v), by Richardson-extrapolated central differences.
inline cplx explicit_tau_derivative(FlowModel m, const PhaseState& s, const ModelParams& p,
                                    double trunc_tol = kDefaultTruncTol) {
  const double h = 1e-5 * (1.0 + std::abs(s.tau));
  auto H = [&](cplx tau) {
    PhaseState t = s;
    t.tau = tau;
    return flow_hamiltonian(m, t, EllipticContext(tau, trunc_tol), p);
  };
  const cplx d1 = (H(s.tau + h) - H(s.tau - h)) / (2.0 * h);
  const cplx d2 = (H(s.tau + 0.5 * h) - H(s.tau - 0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

struct TrajectorySample {
  double s = 0.0;
  PhaseState state;
  cplx H{};
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  ModelParams params;
  FlowModel model = FlowModel::Elliptic;
  PathSpec path;
  long accepted_steps = 0;
  long rejected_steps = 0;

  std::size_t size() const noexcept { return samples.size(); }
  const TrajectorySample& operator[](std::size_t i) const { return samples[i]; }
};

namespace detail {
inline VecC pack(const PhaseState& s) {
  VecC y(2 * s.size());
  y << s.u, s.v;
  return y;
}
inline PhaseState unpack(const VecC& y, cplx tau, bool centered) {
  const Eigen::Index n = y.size() / 2;
  PhaseState s;
  s.u = y.head(n);
  s.v = y.tail(n);
  s.tau = tau;
  s.centered = centered;
  return s;
}
}  // namespace detail

/// Integrates the chosen flow from `initial` (whose τ must equal the first
/// waypoint) along the τ-path. `sample_s` selects output path parameters;
/// when empty every accepted step is returned.
inline Trajectory integrate_flow(FlowModel model, const PhaseState& initial, const ModelParams& p,
                                 const PathSpec& path, std::span<const double> sample_s = {},
                                 std::function<void(double, const PhaseState&)> on_abort = {}) {
  initial.validate();
  path.validate();
  if (std::abs(initial.tau - path.waypoints.front()) > 1e-14 * (1.0 + std::abs(initial.tau))) {
    throw ValidationError("initial tau must equal the first path waypoint");
  }
  if (model == FlowModel::Elliptic && initial.size() != 1) throw ValidationError("elliptic PVI is scalar");
  const double tol = kDefaultTruncTol;
  auto f = [&](cplx tau, const VecC& y) -> VecC {
    const EllipticContext ctx(tau, tol);
    const PhaseState s = detail::unpack(y, tau, false);
    const auto d = flow_rhs(model, s, ctx, p);
    VecC out(y.size());
    out << d.du, d.dv;
    return out;
  };
  std::function<void(double, const VecC&)> abort_cb;
  if (on_abort) {
    abort_cb = [&](double s, const VecC& y) { on_abort(s, detail::unpack(y, path.point(s), initial.centered)); };
  }
  const auto res = integrate_path(f, detail::pack(initial), path, sample_s, abort_cb);
  Trajectory traj;
  traj.params = p;
  traj.model = model;
  traj.path = path;
  traj.accepted_steps = res.accepted_steps;
  traj.rejected_steps = res.rejected_steps;
  for (std::size_t i = 0; i < res.s.size(); ++i) {
    TrajectorySample smp;
    smp.s = res.s[i];
    const cplx tau = res.s[i] == 0.0 ? initial.tau : path.point(res.s[i]);
    smp.state = detail::unpack(res.y[i], tau, initial.centered);
    smp.H = flow_hamiltonian(model, smp.state, EllipticContext(tau, tol), p);
    traj.samples.push_back(std::move(smp));
  }
  return traj;
}

/// Straight τ-segment with default flow tolerances.
inline PathSpec straight_tau_path(cplx tau_a, cplx tau_b, double rtol = 1e-10, double atol = 1e-12) {
  PathSpec p;
  p.waypoints = {tau_a, tau_b};
  p.rtol = rtol;
  p.atol = atol;
  return p;
}

// ---------------------------------------------------------------------------
// Symmetries

/// v → v + κn, u → u − m + τn.
inline PhaseState apply_lattice_shift(const PhaseState& s, const std::vector<long>& m, const std::vector<long>& n,
                                      const ModelParams& p) {
  if (static_cast<Eigen::Index>(m.size()) != s.size() || static_cast<Eigen::Index>(n.size()) != s.size()) {
    throw ValidationError("lattice shift vectors must have length N");
  }
  PhaseState out = s;
  long sum_m = 0, sum_n = 0;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const double mj = static_cast<double>(m[j]);
    const double nj = static_cast<double>(n[j]);
    out.v[j] += p.kappa() * nj;
    out.u[j] += -mj + s.tau * nj;
    sum_m += m[j];
    sum_n += n[j];
  }
  if (sum_m != 0 || sum_n != 0) out.centered = false;
  return out;
}

/// τ → (aτ+b)/(cτ+d), u → u/(cτ+d), v → v(cτ+d) − κcu.
inline PhaseState apply_modular(const PhaseState& s, long a, long b, long c, long d, const ModelParams& p) {
  if (a * d - b * c != 1) throw ValidationError("modular matrix must satisfy ad - bc = 1");
  const cplx j = static_cast<double>(c) * s.tau + static_cast<double>(d);
  if (std::abs(j) == 0.0) throw ValidationError("c tau + d vanishes");
  PhaseState out = s;
  out.tau = (static_cast<double>(a) * s.tau + static_cast<double>(b)) / j;
  out.u = s.u / j;
  out.v = s.v * j - p.kappa() * static_cast<double>(c) * s.u;
  return out;
}

// ---------------------------------------------------------------------------

/// α₀/sinh²u + α₁/sinh²2u + α₂eᵘ + α₃e²ᵘ.
inline cplx inozemtsev_potential(cplx u, const std::array<cplx, 4>& w) {
  cplx acc = w[2] * std::exp(u) + w[3] * std::exp(2.0 * u);
  if (w[0] != 0.0) {
    const cplx s1 = std::sinh(u);
    if (std::abs(s1) < 1e-12) throw SingularPoint("sinh u vanishes");
    acc += w[0] / (s1 * s1);
  }
  if (w[1] != 0.0) {
    const cplx s2 = std::sinh(2.0 * u);
    if (std::abs(s2) < 1e-12) throw SingularPoint("sinh 2u vanishes");
    acc += w[1] / (s2 * s2);
  }
  return acc;
}

}  // namespace pvi
