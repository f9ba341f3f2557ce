#pragma once

// Randomized invariant suites behind `pvi_cli verify`. Every suite draws its
// samples from an Lcg seeded with the run seed, so a fixed seed reproduces
// the report bit for bit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pvi/calogero_limit.hpp"
#include "pvi/curve_morphism.hpp"
#include "pvi/integrators.hpp"
#include "pvi/io.hpp"
#include "pvi/lax_system.hpp"
#include "pvi/painleve_models.hpp"
#include "pvi/special_functions.hpp"

namespace pvi {

struct SuiteResult {
  std::string name;
  int checks = 0;
  int passed = 0;
  double max_error = 0.0;
  double tolerance = 0.0;

  bool ok() const noexcept { return checks > 0 && passed == checks; }

  void record(double err) {
    ++checks;
    if (std::isfinite(err) && err <= tolerance) ++passed;
    max_error = std::isfinite(err) ? std::max(max_error, err) : std::numeric_limits<double>::infinity();
  }
};

namespace detail {

inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline cplx random_tau(Lcg& g, double im_lo = 0.3, double im_hi = 2.0) {
  return g.complex_in_box(-0.5, 0.5, im_lo, im_hi);
}

/// a + bτ with a, b ∈ [−½, ½) and lattice distance at least `margin`.
inline cplx random_point(Lcg& g, cplx tau, double margin = 0.05) {
  for (;;) {
    const cplx u = g.uniform(-0.5, 0.5) + g.uniform(-0.5, 0.5) * tau;
    if (lattice_distance(u, tau) >= margin && lattice_distance(2.0 * u, tau) >= margin) return u;
  }
}

}  // namespace detail

inline SuiteResult suite_wp_differential_equation(Lcg& g) {
  SuiteResult r{"wp_differential_equation", 0, 0, 0.0, 1e-9};
  for (int t = 0; t < 4; ++t) {
    const EllipticContext ctx(detail::random_tau(g));
    const auto& e = ctx.e_values();
    for (int k = 0; k < 10; ++k) {
      const cplx u = detail::random_point(g, ctx.tau());
      const auto w = wp_all(u, ctx);
      const cplx rhs = 4.0 * (w.wp - e[0]) * (w.wp - e[1]) * (w.wp - e[2]);
      r.record(detail::rel_err(w.d1 * w.d1, rhs));
    }
  }
  return r;
}

inline SuiteResult suite_wp_periodicity(Lcg& g) {
  SuiteResult r{"wp_periodicity", 0, 0, 0.0, 1e-10};
  for (int t = 0; t < 4; ++t) {
    const EllipticContext ctx(detail::random_tau(g));
    for (int k = 0; k < 5; ++k) {
      const cplx u = detail::random_point(g, ctx.tau());
      const cplx p = wp(u, ctx);
      r.record(detail::rel_err(wp(u + 1.0, ctx), p));
      r.record(detail::rel_err(wp(u + ctx.tau(), ctx), p));
      r.record(detail::rel_err(wp(-u, ctx), p));
    }
  }
  return r;
}

/// ℘(u/(cτ+d) | (aτ+b)/(cτ+d)) = (cτ+d)² ℘(u|τ) for T and S.
inline SuiteResult suite_modular_generators(Lcg& g) {
  SuiteResult r{"modular_generators", 0, 0, 0.0, 1e-8};
  for (int k = 0; k < 10; ++k) {
    const cplx tau = g.complex_in_box(-0.5, 0.5, 0.8, 1.6);
    const EllipticContext ctx(tau);
    const cplx u = detail::random_point(g, tau);
    const cplx p = wp(u, ctx);
    const EllipticContext ctx_t(tau + 1.0);
    r.record(detail::rel_err(wp(u, ctx_t), p));
    const EllipticContext ctx_s(-1.0 / tau);
    r.record(detail::rel_err(wp(u / tau, ctx_s), tau * tau * p));
  }
  return r;
}

inline SuiteResult suite_duplication(Lcg& g) {
  SuiteResult r{"duplication", 0, 0, 0.0, 1e-9};
  for (int k = 0; k < 20; ++k) {
    const EllipticContext ctx(detail::random_tau(g));
    const cplx u = detail::random_point(g, ctx.tau(), 0.08);
    cplx sum = 0.0;
    for (cplx h : ctx.half_period_points()) sum += wp(u + h, ctx);
    r.record(detail::rel_err(sum, 4.0 * wp(2.0 * u, ctx)));
  }
  return r;
}

inline SuiteResult suite_theta_quasi_periodicity(Lcg& g) {
  SuiteResult r{"theta_quasi_periodicity", 0, 0, 0.0, 1e-10};
  for (int k = 0; k < 20; ++k) {
    const EllipticContext ctx(detail::random_tau(g, 0.5, 1.5));
    const cplx z = detail::random_point(g, ctx.tau());
    const cplx t = theta(z, ctx);
    r.record(detail::rel_err(theta(z + 1.0, ctx), t));
    r.record(detail::rel_err(theta(z + ctx.tau(), ctx), -std::exp(-kTwoPiI * (z + ctx.tau())) * t));
  }
  return r;
}

/// φ(u)φ_u(v) − φ(v)φ_u(u) = (℘(u) − ℘(v)) φ(u+v), all at the same z.
inline SuiteResult suite_kernel_addition(Lcg& g) {
  SuiteResult r{"kernel_addition", 0, 0, 0.0, 1e-9};
  for (int k = 0; k < 20; ++k) {
    const EllipticContext ctx(detail::random_tau(g, 0.6, 1.6));
    const cplx tau = ctx.tau();
    const cplx u = detail::random_point(g, tau, 0.1);
    const cplx v = detail::random_point(g, tau, 0.1);
    const cplx z = detail::random_point(g, tau, 0.1);
    if (lattice_distance(u + v, tau) < 0.1 || lattice_distance(u + z, tau) < 0.1 ||
        lattice_distance(v + z, tau) < 0.1 || lattice_distance(u + v + z, tau) < 0.1) {
      continue;
    }
    const auto [pu, pu_u] = phi_with_du(u, z, ctx);
    const auto [pv, pv_u] = phi_with_du(v, z, ctx);
    const cplx lhs = pu * pv_u - pv * pu_u;
    const cplx rhs = (wp(u, ctx) - wp(v, ctx)) * phi(u + v, z, ctx);
    r.record(std::abs(lhs - rhs) / std::max({std::abs(pu * pv_u), std::abs(pv * pu_u), std::abs(rhs)}));
  }
  return r;
}

inline SuiteResult suite_morphism_curve(Lcg& g) {
  SuiteResult r{"morphism_curve", 0, 0, 0.0, 1e-9};
  for (int k = 0; k < 20; ++k) {
    const EllipticContext ctx(detail::random_tau(g, 0.5, 1.8));
    const cplx u = detail::random_point(g, ctx.tau());
    const auto pt = uniformize(u, ctx);
    const cplx t = t_of_tau(ctx);
    const cplx rhs = pt.X * (pt.X - 1.0) * (pt.X - t);
    r.record(detail::rel_err(pt.Y * pt.Y, rhs));
  }
  return r;
}

inline SuiteResult suite_param_map_roundtrip(Lcg& g) {
  SuiteResult r{"param_map_roundtrip", 0, 0, 0.0, 1e-15};
  for (int k = 0; k < 20; ++k) {
    RationalConstants c{g.complex_in_box(-1, 1, -1, 1), g.complex_in_box(-1, 1, -1, 1),
                        g.complex_in_box(-1, 1, -1, 1), g.complex_in_box(-1, 1, -1, 1)};
    const auto back = param_map_inverse(param_map(c));
    r.record(std::max({std::abs(back.alpha - c.alpha), std::abs(back.beta - c.beta), std::abs(back.gamma - c.gamma),
                       std::abs(back.delta - c.delta)}));
  }
  return r;
}

inline SuiteResult suite_functional_equation(Lcg& g, const LaxParams& lp) {
  SuiteResult r{"functional_equation", 0, 0, 0.0, 1e-10};
  for (int k = 0; k < 20; ++k) {
    const cplx tau = lp.tau0 + g.complex_in_box(-0.1, 0.1, -0.1, 0.1);
    const EllipticContext ctx(tau);
    const cplx u = detail::random_point(g, tau, 0.1);
    const cplx vh = detail::random_point(g, tau, 0.1);
    if (lattice_distance(u + vh, tau) < 0.1) continue;
    const cplx w = g.uniform(0.1, 0.9) + g.uniform(0.1, 0.9) * lp.tau0;
    const auto fe = functional_eq_residual(u, vh, w, tau, ctx, lp);
    r.record(std::abs(fe.residual) / fe.scale);
  }
  return r;
}

inline SuiteResult suite_flatness(Lcg& g, const LaxParams& lp) {
  SuiteResult r{"flatness", 0, 0, 0.0, 1e-6};
  for (int k = 0; k < 8; ++k) {
    const cplx tau = lp.tau0 + g.complex_in_box(-0.05, 0.05, -0.05, 0.05);
    const EllipticContext ctx(tau);
    PhaseState s;
    s.tau = tau;
    s.u = VecC(3);
    s.v = VecC(3);
    s.u << g.complex_in_box(-0.4, -0.25, -0.05, 0.05), g.complex_in_box(-0.05, 0.05, -0.05, 0.05),
        g.complex_in_box(0.25, 0.4, -0.05, 0.05);
    s.v << g.complex_in_box(-0.3, 0.3, -0.3, 0.3), g.complex_in_box(-0.3, 0.3, -0.3, 0.3),
        g.complex_in_box(-0.3, 0.3, -0.3, 0.3);
    const cplx centre = 0.5 * (1.0 + lp.tau0);
    const cplx w = centre + 0.2 * std::exp(kTwoPiI * g.uniform());
    r.record(flatness_residual(s, w, lp, ctx));
  }
  return r;
}

/// b_j from Faddeev–LeVerrier against Newton's identities on trace powers.
inline SuiteResult suite_newton_identities(Lcg& g) {
  SuiteResult r{"newton_identities", 0, 0, 0.0, 1e-10};
  for (int k = 0; k < 10; ++k) {
    const int n = 2 + k % 4;
    MatC A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = g.complex_in_box(-1, 1, -1, 1);
    const VecC b = char_poly_coeffs(A);
    const VecC p = trace_powers(A, n);
    // j b_j = Σ_{i=1}^{j} (−1)^{i−1} b_{j−i} p_i, b_0 = 1.
    for (int j = 1; j <= n; ++j) {
      cplx acc = 0.0;
      for (int i = 1; i <= j; ++i) {
        const cplx bj = (j - i == 0) ? cplx(1.0) : b[j - i - 1];
        acc += (i % 2 ? 1.0 : -1.0) * bj * p[i - 1];
      }
      r.record(std::abs(static_cast<double>(j) * b[j - 1] - acc) / std::max(1.0, std::abs(acc)));
    }
    r.record(detail::rel_err(b[n - 1], A.determinant()));
  }
  return r;
}

/// Flow commutes with u → u − m + τn, v → v + κn.
inline SuiteResult suite_lattice_equivariance(Lcg& g) {
  SuiteResult r{"lattice_equivariance", 0, 0, 0.0, 1e-9};
  for (int k = 0; k < 10; ++k) {
    const cplx tau = detail::random_tau(g, 0.8, 1.5);
    const EllipticContext ctx(tau);
    const double kappa = g.uniform(0.5, 2.0);
    const ModelParams p = ModelParams::pvi_nu(g.uniform(0.5, 1.5), kappa);
    PhaseState s;
    s.tau = tau;
    s.u = VecC(3);
    s.v = VecC(3);
    s.u << cplx(-0.3, 0.02) * tau + 0.1, cplx(0.01, -0.03), cplx(0.32, 0.01) * tau - 0.2;
    for (int j = 0; j < 3; ++j) s.v[j] = g.complex_in_box(-0.5, 0.5, -0.5, 0.5);
    const std::vector<long> m{1, -2, 0};
    const std::vector<long> n{0, 1, -1};
    const PhaseState t = apply_lattice_shift(s, m, n, p);
    const auto d0 = multicomponent_rhs(s, ctx, p);
    const auto d1 = multicomponent_rhs(t, ctx, p);
    for (int j = 0; j < 3; ++j) {
      r.record(std::abs(d1.du[j] - (d0.du[j] + static_cast<double>(n[j]))) / (1.0 + std::abs(d0.du[j])));
      r.record(detail::rel_err(d1.dv[j], d0.dv[j]));
    }
  }
  return r;
}

/// U(−u) = U(u); permuting particles permutes the multicomponent force.
inline SuiteResult suite_weyl_symmetry(Lcg& g) {
  SuiteResult r{"weyl_symmetry", 0, 0, 0.0, 1e-12};
  for (int k = 0; k < 10; ++k) {
    const EllipticContext ctx(detail::random_tau(g, 0.6, 1.5));
    const ModelParams p = ModelParams::from_elliptic(
        {g.complex_in_box(-1, 1, -1, 1), g.complex_in_box(-1, 1, -1, 1), g.complex_in_box(-1, 1, -1, 1),
         g.complex_in_box(-1, 1, -1, 1)});
    const cplx u = detail::random_point(g, ctx.tau(), 0.1);
    r.record(detail::rel_err(potential_U(-u, ctx, p), potential_U(u, ctx, p)));
    VecC q(3);
    q << cplx(-0.3, 0.01), cplx(0.02, 0.04), cplx(0.29, -0.03);
    q += VecC::Constant(3, g.complex_in_box(-0.1, 0.1, -0.1, 0.1));
    VecC qp(3);
    qp << q[2], q[0], q[1];
    const VecC f = multicomponent_force(q, ctx, 1.0);
    const VecC fp = multicomponent_force(qp, ctx, 1.0);
    r.record(detail::rel_err(fp[0], f[2]));
    r.record(detail::rel_err(fp[1], f[0]));
    r.record(detail::rel_err(fp[2], f[1]));
  }
  return r;
}

/// Empirical convergence order p = log2(e(h)/e(h/2)) of a fixed-step run.
struct OrderCheck {
  double order;
  double error_h;
  double error_h2;
};

/// Dormand–Prince pair in fixed-step mode on y′ = λy.
inline OrderCheck rk_order_check(cplx lambda = cplx(-1.0, 2.0), double h = 0.1) {
  auto run = [&](double step) {
    RkOptions opt;
    opt.rtol = 1.0;
    opt.atol = 1.0;
    opt.initial_step = step;
    opt.max_step = step;
    std::vector<double> stops;
    const int n = static_cast<int>(std::lround(1.0 / step));
    for (int i = 1; i <= n; ++i) stops.push_back(i * step);
    auto f = [&](double, const VecC& y) -> VecC { return lambda * y; };
    VecC y0 = VecC::Ones(1);
    const auto res = rk_adaptive(f, y0, 0.0, 1.0, opt, stops);
    return std::abs(res.y.back()[0] - std::exp(lambda));
  };
  const double e1 = run(h);
  const double e2 = run(h / 2.0);
  return {std::log2(e1 / e2), e1, e2};
}

/// Leapfrog on the harmonic oscillator q″ = −q over t ∈ [0, 2].
inline OrderCheck leapfrog_order_check(double dt = 0.02) {
  auto run = [&](double step) {
    const long n = std::lround(2.0 / step);
    VecC q0 = VecC::Ones(1);
    VecC p0 = VecC::Zero(1);
    const auto res = leapfrog([](const VecC& q) -> VecC { return -q; }, q0, p0, step, n, n);
    return std::max(std::abs(res.q.back()[0] - std::cos(2.0)), std::abs(res.p.back()[0] + std::sin(2.0)));
  };
  const double e1 = run(dt);
  const double e2 = run(dt / 2.0);
  return {std::log2(e1 / e2), e1, e2};
}

inline SuiteResult suite_integrator_orders(Lcg& g) {
  SuiteResult r{"integrator_orders", 0, 0, 0.0, 0.3};
  for (int k = 0; k < 3; ++k) {
    const cplx lam = g.complex_in_box(-1.5, -0.5, -2.0, 2.0);
    const auto rk = rk_order_check(lam, 0.1);
    r.record(std::abs(rk.order - 5.0));
  }
  const auto lf = leapfrog_order_check();
  r.record(std::abs(lf.order - 2.0));
  return r;
}

/// Backward leapfrog retraces a forward run.
inline SuiteResult suite_leapfrog_reversibility(Lcg& g) {
  SuiteResult r{"leapfrog_reversibility", 0, 0, 0.0, 1e-10};
  CriticalConfig cfg = CriticalConfig::pvi_nu(1.0);
  const EllipticContext ctx(cfg.tau0);
  for (int k = 0; k < 3; ++k) {
    VecC q(3), p(3);
    q << cplx(-0.33, 0.02), cplx(0.01, -0.03), cplx(0.32, 0.01);
    q += VecC::Constant(3, g.complex_in_box(-0.05, 0.05, -0.05, 0.05));
    for (int j = 0; j < 3; ++j) p[j] = g.complex_in_box(-0.15, 0.15, -0.07, 0.07);
    auto force = [&](const VecC& x) { return calogero_force(x, cfg, ctx); };
    const auto fwd = leapfrog(force, q, p, 1e-3, 500, 500);
    const auto bwd = leapfrog(force, fwd.q.back(), fwd.p.back(), -1e-3, 500, 500);
    r.record(std::max((bwd.q.back() - q).cwiseAbs().maxCoeff(), (bwd.p.back() - p).cwiseAbs().maxCoeff()));
  }
  return r;
}

using SuiteFn = std::function<SuiteResult(Lcg&)>;

/// The full property suite. Each suite gets its own generator, derived from
/// the run seed and the suite index, so suites are independent of each other.
inline std::vector<SuiteResult> run_property_suites(std::uint64_t seed, const LaxParams& lp = LaxParams{}) {
  const std::vector<SuiteFn> suites = {
      suite_wp_differential_equation,
      suite_wp_periodicity,
      suite_modular_generators,
      suite_duplication,
      suite_theta_quasi_periodicity,
      suite_kernel_addition,
      suite_morphism_curve,
      suite_param_map_roundtrip,
      [&lp](Lcg& g) { return suite_functional_equation(g, lp); },
      [&lp](Lcg& g) { return suite_flatness(g, lp); },
      suite_newton_identities,
      suite_lattice_equivariance,
      suite_weyl_symmetry,
      suite_integrator_orders,
      suite_leapfrog_reversibility,
  };
  std::vector<SuiteResult> out;
  for (std::size_t i = 0; i < suites.size(); ++i) {
    Lcg g(seed * 1000003ULL + i);
    out.push_back(suites[i](g));
  }
  return out;
}

inline CsvTable suite_table(const std::vector<SuiteResult>& rs) {
  CsvTable t;
  t.real_column("suite").real_column("checks").real_column("passed").real_column("max_error").real_column(
      "tolerance");
  for (const auto& s : rs) {
    CsvTable::Row row;
    row << s.name << s.checks << s.passed << s.max_error << s.tolerance;
    t.add(row);
  }
  return t;
}

}  // namespace pvi
