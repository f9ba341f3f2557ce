#include <gtest/gtest.h>

#include "pvi/io.hpp"
#include "pvi/painleve_models.hpp"
#include "support/oracles.hpp"

using namespace pvi;

namespace {

PhaseState three_body(cplx tau) {
  PhaseState s;
  s.tau = tau;
  s.u = VecC(3);
  s.v = VecC(3);
  s.u << cplx(-0.33, 0.02), cplx(0.01, -0.03), cplx(0.32, 0.01);
  s.v << cplx(0.1, 0.05), cplx(-0.15, 0.02), cplx(0.05, -0.07);
  return s;
}

std::vector<double> grid(int n) {
  std::vector<double> s;
  for (int i = 0; i < n; ++i) s.push_back(static_cast<double>(i) / (n - 1));
  return s;
}

}  // namespace

TEST(RationalRhs, VanishingVelocityAndConstants) {
  const RationalConstants zero{};
  EXPECT_EQ(pvi_rational_rhs(2.0, 0.0, 3.0, zero), cplx(0.0));
}

TEST(RationalRhs, HandComputedValue) {
  const RationalConstants zero{};
  EXPECT_NEAR(std::abs(pvi_rational_rhs(2.0, 1.0, 3.0, zero) - 5.0 / 12.0), 0.0, 1e-15);
}

TEST(RationalRhs, MatchesTermByTermOracle) {
  Lcg g(1);
  for (int k = 0; k < 20; ++k) {
    const RationalConstants c{g.complex_in_box(-1, 1, -1, 1), g.complex_in_box(-1, 1, -1, 1),
                              g.complex_in_box(-1, 1, -1, 1), g.complex_in_box(-1, 1, -1, 1)};
    const cplx X = g.complex_in_box(-2, 2, -2, 2), Xd = g.complex_in_box(-1, 1, -1, 1);
    const cplx t = g.complex_in_box(-2, 2, 0.3, 2);
    EXPECT_LT(oracle::rel(pvi_rational_rhs(X, Xd, t, c),
                          oracle::pvi_rational(X, Xd, t, c.alpha, c.beta, c.gamma, c.delta)),
              1e-13);
  }
}

TEST(RationalRhs, SingularPoints) {
  const RationalConstants c{};
  EXPECT_THROW(pvi_rational_rhs(0.0, 1.0, 0.5, c), SingularPoint);
  EXPECT_THROW(pvi_rational_rhs(1.0, 1.0, 0.5, c), SingularPoint);
  EXPECT_THROW(pvi_rational_rhs(0.5, 1.0, 0.5, c), SingularPoint);
  EXPECT_THROW(pvi_rational_rhs(0.3, 1.0, 1.0, c), SingularPoint);
}

TEST(ParamMap, Examples) {
  const auto a = param_map({0.0, 0.0, 0.0, 0.5});
  for (cplx x : a) EXPECT_EQ(x, cplx(0.0));
  const auto b = param_map({0.25, -0.25, 0.25, 0.25});
  for (cplx x : b) EXPECT_EQ(x, cplx(0.25));
}

TEST(ParamMap, RoundTrip) {
  Lcg g(2);
  for (int k = 0; k < 20; ++k) {
    const RationalConstants c{g.complex_in_box(-1, 1, -1, 1), g.complex_in_box(-1, 1, -1, 1),
                              g.complex_in_box(-1, 1, -1, 1), g.complex_in_box(-1, 1, -1, 1)};
    const auto r = param_map_inverse(param_map(c));
    EXPECT_EQ(r.alpha, c.alpha);
    EXPECT_EQ(r.beta, c.beta);
    EXPECT_EQ(r.gamma, c.gamma);
    EXPECT_LT(std::abs(r.delta - c.delta), 1e-15);
  }
}

TEST(ModelParams, KappaMustBeNonzero) {
  ModelParams p;
  EXPECT_THROW(p.set_kappa(0.0), ValidationError);
  EXPECT_THROW(ModelParams::pvi_nu(1.0, 0.0), ValidationError);
}

TEST(Potential, ZeroWeights) {
  const EllipticContext ctx(cplx(0, 1.2));
  const ModelParams p = ModelParams::from_elliptic({0, 0, 0, 0});
  EXPECT_EQ(potential_U(cplx(0.2, 0.1), ctx, p), cplx(0.0));
}

TEST(Potential, PviNuIsDuplicatedWp) {
  const EllipticContext ctx(cplx(0.1, 1.1));
  const cplx nu(1.3, 0.2);
  const ModelParams p = ModelParams::pvi_nu(nu);
  for (cplx u : {cplx(0.21, 0.13), cplx(-0.17, 0.4), cplx(0.3, -0.22)}) {
    const cplx expect = nu * nu / (kTwoPiI * kTwoPiI) * wp(2.0 * u, ctx);
    EXPECT_LT(oracle::rel(potential_U(u, ctx, p), expect), 1e-9);
  }
}

TEST(Potential, DerivativesMatchFiniteDifferences) {
  const EllipticContext ctx(cplx(0.1, 1.1));
  const ModelParams p = ModelParams::from_elliptic({0.3, cplx(0.1, 0.2), -0.4, 0.7});
  const cplx u(0.19, 0.23);
  const auto U = [&](cplx x) { return potential_U(x, ctx, p); };
  EXPECT_LT(oracle::rel(potential_dU(u, ctx, p), oracle::d1(U, u, 2e-4)), 1e-9);
  EXPECT_LT(oracle::rel(potential_d2U(u, ctx, p), oracle::d2(U, u, 1e-3)), 1e-7);
}

TEST(EllipticFlow, EquilibriumAtQuarterPeriods) {
  const cplx tau(0.1, 1.2);
  const EllipticContext ctx(tau);
  const ModelParams p = ModelParams::pvi_nu(1.0);
  for (cplx u : {cplx(0.25), 0.25 * tau, 0.25 * (1.0 + tau)}) {
    const auto d = pvi_elliptic_rhs(PhaseState::scalar(u, 0.0, tau), ctx, p);
    EXPECT_LT(std::abs(d.dv[0]), 1e-10);
  }
}

TEST(EllipticFlow, FreeMotionIsAffine) {
  const ModelParams p = ModelParams::from_elliptic({0, 0, 0, 0});
  const cplx tau0(0, 1.2), tau1(0.1, 1.35);
  const cplx u0(0.23, 0.11), v0(0.4, -0.2);
  const auto traj = integrate_flow(FlowModel::Elliptic, PhaseState::scalar(u0, v0, tau0), p,
                                   straight_tau_path(tau0, tau1), grid(11));
  for (const auto& smp : traj.samples) {
    EXPECT_LT(std::abs(smp.state.u[0] - (u0 + v0 * (smp.state.tau - tau0))), 1e-12);
    EXPECT_LT(std::abs(smp.state.v[0] - v0), 1e-14);
  }
}

TEST(EllipticFlow, MatchesRk4Oracle) {
  const ModelParams p = ModelParams::pvi_nu(1.0, 0.7);
  const cplx tau0(0, 1.2), tau1(0.05, 1.28);
  const cplx u0(0.23, 0.11), v0(0.4, -0.2);
  const auto traj = integrate_flow(FlowModel::Elliptic, PhaseState::scalar(u0, v0, tau0), p,
                                   straight_tau_path(tau0, tau1, 1e-12, 1e-14), grid(2));
  auto f = [&](cplx tau, const oracle::VecC& y) -> oracle::VecC {
    // Independent RHS: U′ = (ν²/4)(2πi)⁻² Σ ℘′(u + T_j/2) with ℘′ = 8℘′(2u) summed.
    const EllipticContext ctx(tau);
    oracle::VecC d(2);
    cplx s = 0.0;
    for (cplx h : ctx.half_period_points()) s += wp_prime(y[0] + h, ctx);
    d << y[1] / 0.7, 0.25 / (kTwoPiI * kTwoPiI) * s / 0.7;
    return d;
  };
  oracle::VecC y0(2);
  y0 << u0, v0;
  const auto ref = oracle::rk4(f, y0, tau0, tau1, 400);
  EXPECT_LT(std::abs(traj.samples.back().state.u[0] - ref[0]), 1e-10);
  EXPECT_LT(std::abs(traj.samples.back().state.v[0] - ref[1]), 1e-10);
}

// dH/dτ along the flow equals the explicit ∂H/∂τ.
TEST(EllipticFlow, EnergyBookkeeping) {
  const ModelParams p = ModelParams::pvi_nu(1.0, 1.0);
  const cplx tau0(0, 1.2), tau1(0.06, 1.28);
  const int n = 41;
  const auto traj = integrate_flow(FlowModel::Elliptic, PhaseState::scalar(cplx(0.23, 0.11), cplx(0.4, -0.2), tau0),
                                   p, straight_tau_path(tau0, tau1, 1e-12, 1e-14), grid(n));
  const cplx dtau = (tau1 - tau0) / static_cast<double>(n - 1);
  for (int i = 2; i + 2 < n; ++i) {
    const cplx dH = (-traj[i + 2].H + 8.0 * traj[i + 1].H - 8.0 * traj[i - 1].H + traj[i - 2].H) / (12.0 * dtau);
    const cplx partial = explicit_tau_derivative(FlowModel::Elliptic, traj[i].state, p);
    EXPECT_LT(oracle::rel(dH, partial), 1e-5) << "sample " << i;
  }
}

TEST(MultiFlow, ZeroCouplingIsFree) {
  const cplx tau(0, 1.2);
  const EllipticContext ctx(tau);
  ModelParams p = ModelParams::from_elliptic({0, 0, 0, 0});
  p.set_nu(0.0);
  const auto d = multicomponent_rhs(three_body(tau), ctx, p);
  EXPECT_EQ(d.dv.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MultiFlow, ForcesSumToZero) {
  const cplx tau(0.1, 1.1);
  const EllipticContext ctx(tau);
  const auto d = multicomponent_rhs(three_body(tau), ctx, ModelParams::pvi_nu(1.2));
  EXPECT_LT(std::abs(d.dv.sum()), 1e-12);
}

TEST(MultiFlow, ForceIsMinusGradientOfPotential) {
  const cplx tau(0.1, 1.1);
  const EllipticContext ctx(tau);
  const PhaseState s = three_body(tau);
  const VecC F = multicomponent_force(s.u, ctx, 1.0);
  for (int j = 0; j < 3; ++j) {
    const auto V = [&](cplx x) {
      VecC u = s.u;
      u[j] = x;
      return multicomponent_potential(u, ctx, 1.0);
    };
    EXPECT_LT(oracle::rel(F[j], -oracle::d1(V, s.u[j], 2e-4)), 1e-9);
  }
}

TEST(MultiFlow, CollisionRaises) {
  const cplx tau(0, 1.2);
  const EllipticContext ctx(tau);
  PhaseState s = three_body(tau);
  s.u[1] = s.u[0] + 1.0;
  EXPECT_THROW(multicomponent_rhs(s, ctx, ModelParams::pvi_nu(1.0)), ParticleCollision);
}

TEST(MultiFlow, CenterOfMassConserved) {
  const cplx tau0(0, 1.2), tau1(0.05, 1.25);
  const ModelParams p = ModelParams::pvi_nu(1.0);
  const auto traj =
      integrate_flow(FlowModel::Multicomponent, three_body(tau0), p, straight_tau_path(tau0, tau1), grid(11));
  const cplx su0 = traj[0].state.u.sum(), sv0 = traj[0].state.v.sum();
  for (const auto& smp : traj.samples) {
    EXPECT_LT(std::abs(smp.state.v.sum() - sv0), 1e-10);
    EXPECT_LT(std::abs(smp.state.u.sum() - su0 - sv0 * (smp.state.tau - tau0)), 1e-10);
  }
}

TEST(MultiFlow, WeylPermutation) {
  const cplx tau(0.1, 1.1);
  const EllipticContext ctx(tau);
  const ModelParams p = ModelParams::pvi_nu(1.0);
  const PhaseState s = three_body(tau);
  PhaseState t = s;
  const int perm[3] = {2, 0, 1};
  for (int j = 0; j < 3; ++j) {
    t.u[j] = s.u[perm[j]];
    t.v[j] = s.v[perm[j]];
  }
  const auto a = multicomponent_rhs(s, ctx, p);
  const auto b = multicomponent_rhs(t, ctx, p);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(b.du[j], a.du[perm[j]]);
    EXPECT_LT(std::abs(b.dv[j] - a.dv[perm[j]]), 1e-14 * std::abs(a.dv[perm[j]]));
  }
}

TEST(MultiFlow, EnergyBookkeeping) {
  const ModelParams p = ModelParams::pvi_nu(1.0, 1.0);
  const cplx tau0(0, 1.2), tau1(0.04, 1.26);
  const int n = 41;
  const auto traj = integrate_flow(FlowModel::Multicomponent, three_body(tau0), p,
                                   straight_tau_path(tau0, tau1, 1e-12, 1e-14), grid(n));
  const cplx dtau = (tau1 - tau0) / static_cast<double>(n - 1);
  for (int i = 2; i + 2 < n; i += 4) {
    const cplx dH = (-traj[i + 2].H + 8.0 * traj[i + 1].H - 8.0 * traj[i - 1].H + traj[i - 2].H) / (12.0 * dtau);
    EXPECT_LT(oracle::rel(dH, explicit_tau_derivative(FlowModel::Multicomponent, traj[i].state, p)), 1e-5);
  }
}

// Centred N=2 states follow the scalar flow with weights ν²/8, and the
// Hamiltonians differ by the reduced-mass factor 2.
TEST(MultiFlow, TwoBodyReducesToScalarFlow) {
  const cplx nu(1.0);
  const cplx tau0(0, 1.2), tau1(0.04, 1.25);
  PhaseState s;
  s.tau = tau0;
  s.u = VecC(2);
  s.v = VecC(2);
  s.u << cplx(0.24, 0.03), cplx(-0.24, -0.03);
  s.v << cplx(0.2, -0.05), cplx(-0.2, 0.05);
  s.centered = true;
  const auto multi = integrate_flow(FlowModel::Multicomponent, s, ModelParams::pvi_nu(nu),
                                    straight_tau_path(tau0, tau1, 1e-12, 1e-14), grid(6));
  const cplx a = nu * nu / 8.0;
  const ModelParams reduced = ModelParams::from_elliptic({a, a, a, a});
  const auto scalar = integrate_flow(FlowModel::Elliptic, PhaseState::scalar(s.u[0], s.v[0], tau0), reduced,
                                     straight_tau_path(tau0, tau1, 1e-12, 1e-14), grid(6));
  for (std::size_t i = 0; i < multi.size(); ++i) {
    EXPECT_LT(std::abs(multi[i].state.u[0] - scalar[i].state.u[0]), 1e-10);
    EXPECT_LT(std::abs(multi[i].state.u[1] + scalar[i].state.u[0]), 1e-10);
    EXPECT_LT(oracle::rel(multi[i].H, 2.0 * scalar[i].H), 1e-9);
  }
}

TEST(LatticeShift, IdentityAndEquivariance) {
  const cplx tau(0.1, 1.1);
  const EllipticContext ctx(tau);
  const ModelParams p = ModelParams::pvi_nu(1.0, 0.8);
  const PhaseState s = three_body(tau);
  const PhaseState same = apply_lattice_shift(s, {0, 0, 0}, {0, 0, 0}, p);
  EXPECT_EQ((same.u - s.u).norm(), 0.0);
  EXPECT_EQ((same.v - s.v).norm(), 0.0);
  const std::vector<long> m{2, -1, 0}, n{1, 0, -2};
  const PhaseState t = apply_lattice_shift(s, m, n, p);
  const auto a = multicomponent_rhs(s, ctx, p);
  const auto b = multicomponent_rhs(t, ctx, p);
  for (int j = 0; j < 3; ++j) {
    EXPECT_LT(std::abs(b.du[j] - (a.du[j] + static_cast<double>(n[j]))), 1e-12);
    EXPECT_LT(oracle::rel(b.dv[j], a.dv[j]), 1e-12);
  }
}

TEST(LatticeShift, MapsTrajectoriesToTrajectories) {
  const ModelParams p = ModelParams::pvi_nu(1.0);
  const cplx tau0(0, 1.2), tau1(0.05, 1.26);
  const std::vector<long> m{1, 0}, n{0, 1};
  PhaseState s = PhaseState::scalar(cplx(0.23, 0.11), cplx(0.4, -0.2), tau0);
  const auto base = integrate_flow(FlowModel::Elliptic, s, p, straight_tau_path(tau0, tau1, 1e-12, 1e-14), grid(3));
  const PhaseState s2 = apply_lattice_shift(s, {m[0]}, {n[1]}, p);
  const auto shifted =
      integrate_flow(FlowModel::Elliptic, s2, p, straight_tau_path(tau0, tau1, 1e-12, 1e-14), grid(3));
  for (std::size_t i = 0; i < base.size(); ++i) {
    const PhaseState mapped = apply_lattice_shift(base[i].state, {m[0]}, {n[1]}, p);
    EXPECT_LT(std::abs(mapped.u[0] - shifted[i].state.u[0]), 1e-10);
    EXPECT_LT(std::abs(mapped.v[0] - shifted[i].state.v[0]), 1e-10);
  }
}

TEST(Modular, TrivialCases) {
  const ModelParams p = ModelParams::pvi_nu(1.0);
  const PhaseState s = three_body(cplx(0.1, 1.1));
  const PhaseState id = apply_modular(s, 1, 0, 0, 1, p);
  EXPECT_EQ(id.tau, s.tau);
  EXPECT_EQ((id.u - s.u).norm(), 0.0);
  const PhaseState t = apply_modular(s, 1, 1, 0, 1, p);
  EXPECT_EQ(t.tau, s.tau + 1.0);
  EXPECT_EQ((t.u - s.u).norm(), 0.0);
  EXPECT_EQ((t.v - s.v).norm(), 0.0);
  EXPECT_THROW(apply_modular(s, 1, 1, 1, 1, p), ValidationError);
}

// Chain rule: du'/dτ' = (cτ+d)·du/dτ − c·u must equal the flow at the image.
TEST(Modular, FlowEquivariancePointwise) {
  const cplx tau(0.1, 1.1);
  const double kappa = 0.9;
  const ModelParams p = ModelParams::pvi_nu(1.0, kappa);
  const PhaseState s = three_body(tau);
  const auto d = multicomponent_rhs(s, EllipticContext(tau), p);
  const long mats[][4] = {{1, 1, 0, 1}, {0, -1, 1, 0}, {2, 1, 1, 1}};
  for (const auto& mm : mats) {
    const PhaseState t = apply_modular(s, mm[0], mm[1], mm[2], mm[3], p);
    const cplx j = static_cast<double>(mm[2]) * tau + static_cast<double>(mm[3]);
    const auto e = multicomponent_rhs(t, EllipticContext(t.tau), p);
    for (int k = 0; k < 3; ++k) {
      const cplx du = j * d.du[k] - static_cast<double>(mm[2]) * s.u[k];
      // dv'/dτ' = j²·d/dτ[vj − κcu] = j²(j·dv/dτ + cv − κc·du/dτ) = j³·dv/dτ.
      EXPECT_LT(oracle::rel(e.du[k], du), 1e-10);
      EXPECT_LT(oracle::rel(e.dv[k], j * j * j * d.dv[k]), 1e-9);
    }
  }
}

// Integrating the image initial data along the image segment reproduces the
// image of the original trajectory (the solution is analytic in τ).
TEST(Modular, TrajectoryEquivariance) {
  const ModelParams p = ModelParams::pvi_nu(1.0);
  const cplx tau0(0.1, 1.1), tau1(0.14, 1.16);
  const auto base = integrate_flow(FlowModel::Multicomponent, three_body(tau0), p,
                                   straight_tau_path(tau0, tau1, 1e-12, 1e-14), grid(2));
  const PhaseState a0 = apply_modular(base[0].state, 0, -1, 1, 0, p);
  const PhaseState a1 = apply_modular(base[1].state, 0, -1, 1, 0, p);
  const auto image =
      integrate_flow(FlowModel::Multicomponent, a0, p, straight_tau_path(a0.tau, a1.tau, 1e-12, 1e-14), grid(2));
  EXPECT_LT((image[1].state.u - a1.u).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((image[1].state.v - a1.v).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Inozemtsev, Examples) {
  EXPECT_EQ(inozemtsev_potential(0.3, {0, 0, 0, 0}), cplx(0.0));
  EXPECT_LT(std::abs(inozemtsev_potential(0.0, {0, 0, 1, 1}) - 2.0), 1e-15);
  EXPECT_LT(std::abs(inozemtsev_potential(std::log(2.0), {1, 0, 0, 0}) - 16.0 / 9.0), 1e-14);
  EXPECT_THROW(inozemtsev_potential(0.0, {1, 0, 0, 0}), SingularPoint);
}

TEST(Integration, InitialTauMustMatchPath) {
  const ModelParams p = ModelParams::pvi_nu(1.0);
  const auto s = PhaseState::scalar(0.2, 0.1, cplx(0, 1.0));
  EXPECT_THROW(integrate_flow(FlowModel::Elliptic, s, p, straight_tau_path(cplx(0, 1.2), cplx(0, 1.3))),
               ValidationError);
}

TEST(Integration, NonFiniteForceAbortsWithLastState) {
  // Weights this large overflow the force at the first evaluation.
  const ModelParams p = ModelParams::from_elliptic({1e308, 1e308, 1e308, 1e308});
  const cplx tau0(0, 1.2);
  const auto s = PhaseState::scalar(cplx(0.05, 0.02), cplx(0.0, -0.4), tau0);
  bool called = false;
  PhaseState last;
  EXPECT_THROW(integrate_flow(FlowModel::Elliptic, s, p, straight_tau_path(tau0, cplx(0, 1.5)), {},
                              [&](double, const PhaseState& st) {
                                called = true;
                                last = st;
                              }),
               NumericalError);
  ASSERT_TRUE(called);
  EXPECT_EQ(last.u[0], s.u[0]);
  EXPECT_EQ(last.tau, tau0);
}

TEST(Integration, LatticeStartAbortsWithState) {
  const cplx tau0(0, 1.2);
  const auto s = PhaseState::scalar(0.0, 1.0, tau0);
  bool called = false;
  EXPECT_THROW(integrate_flow(FlowModel::Elliptic, s, ModelParams::pvi_nu(1.0), straight_tau_path(tau0, cplx(0, 1.3)),
                              {}, [&](double, const PhaseState&) { called = true; }),
               NumericalError);
  EXPECT_TRUE(called);
}
