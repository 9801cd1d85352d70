#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "vortexflow/diagnostics.hpp"
#include "vortexflow/flow.hpp"
#include "vortexflow/run.hpp"

using namespace vflow;
using namespace vflow::testing;

namespace {

const double kL = 2 * kPi * std::sqrt(2.0);

struct Direction {
  OneForm A;
  ComplexField phi;
};

Direction random_direction(const TorusGeometry& g, std::uint64_t seed) {
  Rng rng(seed);
  Direction d{OneForm(g.n1(), g.n2()), ComplexField(g.n1(), g.n2())};
  for (std::size_t k = 0; k < d.phi.size(); ++k) {
    d.A.a1[k] = rng.normal();
    d.A.a2[k] = rng.normal();
    const double re = rng.normal();
    d.phi[k] = complex(re, rng.normal());
  }
  return d;
}

FlowState shifted(const FlowState& s, const Direction& d, double eps) {
  FlowState out = s;
  for (std::size_t k = 0; k < s.phi.size(); ++k) {
    out.A.a1[k] += eps * d.A.a1[k];
    out.A.a2[k] += eps * d.A.a2[k];
    out.phi[k] += eps * d.phi[k];
  }
  return out;
}

double pairing(const Gradient& G, const Direction& d, const TorusGeometry& g) {
  return inner(G.A, d.A, g) + inner(G.phi, d.phi, g);
}

double dir_norm(const Direction& d, const TorusGeometry& g) {
  return std::hypot(l2_norm(d.A, g), l2_norm(d.phi, g));
}

}  // namespace

TEST(SolveA0, ZeroSection) {
  const auto g = make_geometry(kL, kL, 32, 32);
  const auto b = make_bundle(1, g);
  FlowState s(32, 32);
  s.A = random_divfree_oneform(g, 1, 0.1);
  EXPECT_LT(max_abs(solve_a0(s, g, b)), 1e-14);
}

TEST(SolveA0, RealSectionTrivialBundle) {
  const auto g = make_geometry(3, 3, 32, 32);
  const auto b = make_bundle(0, g);
  FlowState s(32, 32);
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i) s.phi(i, j) = 1.0 + 0.3 * std::sin(2 * kPi * g.x1(i) / 3) * std::cos(2 * kPi * g.x2(j) / 3);
  EXPECT_LT(max_abs(solve_a0(s, g, b, EnergyForm::Direct)), 1e-14);
}

TEST(SolveA0, ResidualAndNormalization) {
  for (int N : {0, 1, 2})
    for (auto form : {EnergyForm::Bogomolny, EnergyForm::Direct}) {
      const auto g = make_geometry(kL, kL, 32, 32);
      const auto b = make_bundle(N, g);
      const FlowState s = rough_state(g, b, 10 + N);
      const RealField a0 = solve_a0(s, g, b, form);
      const Gradient G = energy_gradient(s, g, b, form);
      // Delta_h A0 = div_h G_A, i.e. -Delta A0 = div J with J = -G_A.
      const RealField src = div(G.A, g, Stencil::Lattice);
      RealField r = laplacian(a0, g, Stencil::Lattice);
      r -= src;
      EXPECT_LT(l2_norm(r, g), 1e-10 * l2_norm(src, g));
      EXPECT_NEAR(integrate(a0, g), 0.0, 1e-12 * (1 + l2_norm(a0, g)));
    }
}

TEST(SolveA0, DirectFormSourceIsHiggsCurrent) {
  // For the direct energy, G_A = curl-part - J with J_j = Im(conj(Phi) U_j Phi(x+e_j)) / h_j.
  const auto g = make_geometry(kL, kL, 24, 24);
  const auto b = make_bundle(1, g);
  const FlowState s = rough_state(g, b, 2);
  const Links L = make_links(b, s.A);
  OneForm J(24, 24);
  for (int j = 0; j < 24; ++j)
    for (int i = 0; i < 24; ++i) {
      J.a1(i, j) = (std::conj(s.phi(i, j)) * transported_next1(s.phi, L, i, j)).imag() / g.h1();
      J.a2(i, j) = (std::conj(s.phi(i, j)) * transported_next2(s.phi, L, i, j)).imag() / g.h2();
    }
  const RealField a0 = solve_a0(s, g, b, EnergyForm::Direct);
  RealField lhs = laplacian(a0, g, Stencil::Lattice);
  const RealField rhs = div(J, g, Stencil::Lattice);
  for (std::size_t k = 0; k < lhs.size(); ++k) EXPECT_NEAR(-lhs[k], rhs[k], 1e-9 * (1 + max_abs(rhs)));
}

TEST(EnergyGradient, StationaryPoints) {
  const auto g = make_geometry(3, 3, 16, 16);
  const Gradient G = energy_gradient(FlowState(16, 16), g, make_bundle(1, g));
  EXPECT_LT(grad_norm(G, g), 1e-14);
  FlowState vac(16, 16);
  for (auto& p : vac.phi) p = 1.0;
  for (auto form : {EnergyForm::Bogomolny, EnergyForm::Direct})
    EXPECT_EQ(grad_norm(energy_gradient(vac, g, make_bundle(0, g), form), g), 0.0);
}

TEST(EnergyGradient, MatchesCentralDifferences) {
  const double eps = 1e-6;
  for (auto form : {EnergyForm::Bogomolny, EnergyForm::Direct})
    for (int N : {0, 1, 2})
      for (double L : {kL, 3.0}) {
        const auto g = make_geometry(L, L, 32, 32);
        const auto b = make_bundle(N, g);
        const FlowState s = smooth_state(g, b, 100 + N);
        const Gradient G = energy_gradient(s, g, b, form);
        const double gn = grad_norm(G, g);
        for (std::uint64_t k = 0; k < 10; ++k) {
          const Direction d = random_direction(g, 1000 + k);
          const double fd = (discrete_energy(shifted(s, d, eps).A, shifted(s, d, eps).phi, g, b, form) -
                             discrete_energy(shifted(s, d, -eps).A, shifted(s, d, -eps).phi, g, b, form)) /
                            (2 * eps);
          EXPECT_LE(std::abs(pairing(G, d, g) - fd) / (gn * dir_norm(d, g)), 1e-6)
              << to_string(form) << " N=" << N << " L=" << L << " dir=" << k;
        }
      }
}

TEST(EnergyGradient, GaugeDirectionIsEnergyNeutral) {
  const auto g = make_geometry(kL, kL, 24, 24);
  const auto b = make_bundle(1, g);
  const FlowState s = rough_state(g, b, 6);
  const RealField chi = noise(g, 7);
  Direction d{grad(chi, g, Stencil::Lattice), ComplexField(24, 24)};
  for (std::size_t k = 0; k < chi.size(); ++k) d.phi[k] = complex(0.0, chi[k]) * s.phi[k];
  for (auto form : {EnergyForm::Bogomolny, EnergyForm::Direct}) {
    const Gradient G = energy_gradient(s, g, b, form);
    EXPECT_LT(std::abs(pairing(G, d, g)), 1e-11 * grad_norm(G, g) * dir_norm(d, g));
  }
}

TEST(Step, StationaryInputUnchanged) {
  const auto g = make_geometry(3, 3, 16, 16);
  const auto b = make_bundle(1, g);
  const FlowState s(16, 16);
  StepPolicy p;
  const FlowState t = step(s, p, g, b);
  EXPECT_GT(t.t, 0.0);
  EXPECT_EQ(max_abs(t.A.a1), 0.0);
  EXPECT_EQ(max_abs(t.A.a2), 0.0);
  EXPECT_EQ(l2_norm(t.phi, g), 0.0);
}

TEST(Step, EulerStepDecreasesEnergyAtFirstOrderRate) {
  const auto g = make_geometry(kL, kL, 32, 32);
  const auto b = make_bundle(1, g);
  const FlowState s = smooth_state(g, b, 12);
  for (auto form : {EnergyForm::Bogomolny, EnergyForm::Direct}) {
    const double E0 = discrete_energy(s.A, s.phi, g, b, form);
    const double G2 = std::pow(grad_norm(s, g, b, form), 2);
    std::vector<double> rem;
    for (double dt : {1e-3, 5e-4, 2.5e-4}) {
      StepPolicy p;
      p.energy = form;
      p.dt = dt;
      const FlowState t = step(s, p, g, b);
      const double E1 = discrete_energy(t.A, t.phi, g, b, form);
      EXPECT_LT(E1, E0);
      rem.push_back(std::abs((E1 - E0) / dt + G2));
    }
    EXPECT_NEAR(rem[0] / rem[1], 2.0, 0.3);
    EXPECT_NEAR(rem[1] / rem[2], 2.0, 0.3);
  }
}

TEST(Step, RK4AndEulerAgreeToFirstOrder) {
  const auto g = make_geometry(kL, kL, 16, 16);
  const auto b = make_bundle(1, g);
  const FlowState s = smooth_state(g, b, 13);
  StepPolicy e, r;
  e.dt = r.dt = 1e-3;
  r.scheme = Scheme::RK4;
  const FlowState se = step(s, e, g, b), sr = step(s, r, g, b);
  EXPECT_LT(max_abs_diff(se.phi, sr.phi), 1e-4);
  EXPECT_LT(discrete_energy(sr.A, sr.phi, g, b, EnergyForm::Bogomolny),
            discrete_energy(s.A, s.phi, g, b, EnergyForm::Bogomolny));
}

TEST(Step, GaugeTermsDoNotChangeInvariantsToFirstOrder) {
  const auto g = make_geometry(kL, kL, 24, 24);
  const auto b = make_bundle(1, g);
  const FlowState s = smooth_state(g, b, 14);
  std::vector<double> diffs;
  for (double dt : {1e-3, 5e-4}) {
    FlowEngine with(g, b, EnergyForm::Bogomolny, true), without(g, b, EnergyForm::Bogomolny, false);
    Stepper sw(with), so(without);
    FlowState a = s, c = s;
    sw.step(a, Scheme::ForwardEuler, dt);
    so.step(c, Scheme::ForwardEuler, dt);
    const double Ea = discrete_energy(a.A, a.phi, g, b, EnergyForm::Bogomolny);
    const double Ec = discrete_energy(c.A, c.phi, g, b, EnergyForm::Bogomolny);
    diffs.push_back(std::abs(Ea - Ec) / dt);
  }
  // Energy difference per unit time vanishes linearly with dt.
  EXPECT_NEAR(diffs[0] / diffs[1], 2.0, 0.4);
}

TEST(Step, CoulombMaintainedOverManySteps) {
  const auto g = make_geometry(kL, kL, 16, 16);
  const auto b = make_bundle(1, g);
  FlowState s = smooth_state(g, b, 15);
  FlowEngine engine(g, b, EnergyForm::Bogomolny);
  Stepper st(engine);
  StepPolicy p;
  const double dt = resolve_dt(p, g);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    st.step(s, Scheme::ForwardEuler, dt);
    if (k % 100 == 0) worst = std::max(worst, engine.coulomb_residual(s.A));
  }
  EXPECT_LE(std::max(worst, engine.coulomb_residual(s.A)), 1e-8);
}

TEST(Step, BlowUpIsReported) {
  const auto g = make_geometry(kL, kL, 16, 16);
  const auto b = make_bundle(1, g);
  StepPolicy p;
  p.dt = 50.0 * euler_stability_limit(g, p.energy);
  p.t_max = 1e3;
  p.record_every = 1 << 20;
  long dumped = -1;
  RunHooks h;
  h.on_blowup = [&](const FlowState&, long step) { dumped = step; };
  try {
    run(smooth_state(g, b, 1), p, g, b, h);
    FAIL() << "expected an error";
  } catch (const BlowUpError& e) {
    EXPECT_EQ(e.step, dumped);
  } catch (const ResolutionError&) {
    EXPECT_GE(dumped, 0);
  }
}

TEST(ResolveDt, AutoIsStableAndScales) {
  const auto g = make_geometry(kL, kL, 32, 32);
  StepPolicy p;
  const double dt = resolve_dt(p, g);
  EXPECT_NEAR(dt, 0.8 * euler_stability_limit(g, p.energy), 1e-15);
  const double h = g.h1();
  EXPECT_NEAR(principal_spectral_radius(g, EnergyForm::Direct), 8 / (h * h), 1e-9 / (h * h));
  EXPECT_NEAR(principal_spectral_radius(g, EnergyForm::Bogomolny), std::pow(std::sqrt(2.0) + 2, 2) / (h * h), 1e-9 / (h * h));
  p.dt = 0.123;
  EXPECT_EQ(resolve_dt(p, g), 0.123);
}

TEST(Run, SubcriticalMinimizerReturnsImmediately) {
  const auto g = make_geometry(3, 3, 16, 16);
  const auto b = make_bundle(1, g);
  const RunResult r = run(FlowState(16, 16), StepPolicy{}, g, b);
  EXPECT_EQ(r.status, RunStatus::Converged);
  EXPECT_EQ(r.steps, 0);
  ASSERT_EQ(r.series.size(), 1u);
  EXPECT_NEAR(r.series[0].energy, v_min(1, g), 1e-12);
}

TEST(Run, ZeroTimeBudgetIsNonConvergence) {
  const auto g = make_geometry(kL, kL, 16, 16);
  const auto b = make_bundle(1, g);
  StepPolicy p;
  p.t_max = 0.0;
  const RunResult r = run(smooth_state(g, b, 2), p, g, b);
  EXPECT_EQ(r.status, RunStatus::MaxTime);
  EXPECT_EQ(r.steps, 0);
  EXPECT_EQ(r.series.size(), 1u);
}

TEST(Run, InvariantsAndDeterminism) {
  const auto g = make_geometry(kL, kL, 16, 16);
  const auto b = make_bundle(1, g);
  StepPolicy p;
  p.t_max = 5.0;
  p.record_every = 25;
  const FlowState init = smooth_state(g, b, 3);
  const RunResult r1 = run(init, p, g, b);
  const RunResult r2 = run(init, p, g, b);
  ASSERT_EQ(r1.series.size(), r2.series.size());
  EXPECT_GT(r1.series.size(), 5u);
  for (std::size_t k = 0; k < r1.series.size(); ++k) {
    EXPECT_EQ(r1.series[k].energy, r2.series[k].energy);
    EXPECT_EQ(r1.series[k].eta_l2, r2.series[k].eta_l2);
    EXPECT_NEAR(r1.series[k].flux, 2 * kPi, 1e-10);
    if (k > 0) {
      EXPECT_LE(r1.series[k].energy_bogomolny,
                r1.series[k - 1].energy_bogomolny + 1e-10 * (1 + r1.series[k].energy_bogomolny));
    }
  }
  EXPECT_EQ(r1.monotonicity_violations, 0);
  ASSERT_TRUE(r1.state.a0.has_value());
  EXPECT_NEAR(integrate(*r1.state.a0, g), 0.0, 1e-12);
  FlowEngine engine(g, b, EnergyForm::Bogomolny);
  EXPECT_LE(engine.coulomb_residual(r1.state.A), 1e-8);
}

TEST(GradNorm, LinearNearNondegenerateMinimizer) {
  const auto g = make_geometry(3, 3, 16, 16);
  const auto b = make_bundle(1, g);
  const Direction d = random_direction(g, 77);
  const FlowState zero(16, 16);
  EXPECT_EQ(grad_norm(zero, g, b), 0.0);
  const double g1 = grad_norm(shifted(zero, d, 1e-4), g, b);
  const double g2 = grad_norm(shifted(zero, d, 5e-5), g, b);
  EXPECT_NEAR(g1 / g2, 2.0, 1e-3);
}
