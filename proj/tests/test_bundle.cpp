#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "support.hpp"
#include "vortexflow/covariant.hpp"
#include "vortexflow/diagnostics.hpp"
#include "vortexflow/errors.hpp"

using namespace vflow;
using namespace vflow::testing;

TEST(MakeBundle, TrivialBundleHasUnitLinks) {
  const auto g = make_geometry(3, 4, 16, 12);
  const auto b = make_bundle(0, g);
  EXPECT_EQ(b.b(), 0.0);
  const Links L = make_links(b, OneForm(16, 12));
  for (std::size_t k = 0; k < L.w1.size(); ++k) {
    EXPECT_EQ(L.w1[k], complex(1.0));
    EXPECT_EQ(L.w2[k], complex(1.0));
  }
  for (int j = 0; j < 12; ++j) EXPECT_EQ(b.transition(j), complex(1.0));
}

TEST(MakeBundle, Examples) {
  const double L = 2 * kPi * std::sqrt(2.0);
  const auto g = make_geometry(L, L, 64, 64);
  const auto b = make_bundle(1, g);
  EXPECT_NEAR(b.b(), 1 / (4 * kPi), 1e-15);
  EXPECT_NEAR(flux(magnetic_field(OneForm(64, 64), b, g), g), 2 * kPi, 1e-12);

  const auto g3 = make_geometry(3, 3, 32, 32);
  const auto b2 = make_bundle(2, g3);
  EXPECT_NEAR(b2.b(), 4 * kPi / 9, 1e-15);
  EXPECT_NEAR(flux(magnetic_field(OneForm(32, 32), b2, g3), g3), 4 * kPi, 1e-12);
}

TEST(MakeBundle, BackgroundFluxExactAcrossDegreesAndGrids) {
  for (int N : {0, 1, 2, 5, 11})
    for (int n : {8, 16, 33, 128}) {
      const auto g = make_geometry(4 * kPi, 4 * kPi, n, n + 2);
      const auto b = make_bundle(N, g);
      EXPECT_NEAR(flux(magnetic_field(OneForm(n, n + 2), b, g), g), 2 * kPi * N, 1e-12);
      // The link-product phase agrees with the assembled angle, seam included.
      const Links Lk = make_links(b, OneForm(n, n + 2));
      const RealField theta = plaquette_angles(b, OneForm(n, n + 2));
      for (int j = 0; j < n + 2; ++j)
        for (int i = 0; i < n; ++i) {
          const int ip = (i + 1) % n, jp = (j + 1) % (n + 2);
          const complex P = Lk.w1(i, j) * Lk.w2(ip, j) * std::conj(Lk.w1(i, jp)) * std::conj(Lk.w2(i, j));
          EXPECT_NEAR(-std::arg(P), theta(i, j), 1e-11);
        }
    }
}

TEST(MakeBundle, Rejections) {
  const auto g = make_geometry(3, 3, 16, 16);
  EXPECT_THROW(make_bundle(-1, g), ConfigError);
  std::vector<double> rho(256);
  for (int k = 0; k < 256; ++k) rho[k] = 0.1 * std::sin(k);
  const auto gr = make_geometry(3, 3, 16, 16, rho);
  EXPECT_THROW(make_bundle(1, gr), UnsupportedConfiguration);
  EXPECT_NO_THROW(make_bundle(0, gr));
}

TEST(Twist, SeamTransportMatchesContinuationOfSection) {
  // Sample the analytic quasi-periodic theta section one period further in x1;
  // transporting through the seam link must reproduce the continued value.
  const double L = 2 * kPi * std::sqrt(2.0);
  const int n = 32;
  const auto g = make_geometry(L, L, n, n);
  const auto b = make_bundle(1, g);
  const double sigma = 1.3;
  const ComplexField phi = theta_section(b, g, sigma);
  auto continued = [&](double x1, double x2) {
    complex s = 0.0;
    for (int m = -20; m <= 20; ++m) {
      const double u = x1 - m * L;
      s += std::exp(-u * u / (2 * sigma * sigma)) * std::polar(1.0, 2 * kPi * m * x2 / L);
    }
    return s;
  };
  for (int j = 0; j < n; ++j) {
    // Stored value at i = 0 is the section at x1 = 0; at x1 = L1 it is T(x2) times that.
    const complex at_L = continued(L, g.x2(j));
    EXPECT_NEAR(std::abs(at_L - b.transition(j) * phi(0, j)), 0.0, 1e-12);
  }
  // Forward differences are as smooth across the seam as next to it.
  const auto [d1, d2] = covariant_derivative(phi, OneForm(n, n), b);
  for (int j = 0; j < n; ++j)
    EXPECT_NEAR(std::abs(d1(n - 1, j) - d1(n - 2, j)), 0.0, 4 * g.h1() * (1 + std::abs(d1(n - 2, j))));
}

TEST(ApplyGauge, ConstantChiIsGlobalPhase) {
  const double L = 2 * kPi * std::sqrt(2.0);
  const auto g = make_geometry(L, L, 32, 32);
  const auto b = make_bundle(1, g);
  const FlowState s = smooth_state(g, b, 3);
  const FlowState t = apply_gauge(s, RealField(32, 32, 0.7), g);
  EXPECT_EQ(max_abs_diff(t.A.a1, s.A.a1), 0.0);
  EXPECT_EQ(max_abs_diff(t.A.a2, s.A.a2), 0.0);
  for (std::size_t k = 0; k < s.phi.size(); ++k) EXPECT_NEAR(std::abs(t.phi[k] - std::polar(1.0, 0.7) * s.phi[k]), 0.0, 1e-15);
  EXPECT_NEAR(energy(t, g, b), energy(s, g, b), 1e-13);
}

TEST(ApplyGauge, RandomChiPreservesEnergyAndFlux) {
  const double L = 2 * kPi * std::sqrt(2.0);
  const auto g = make_geometry(L, L, 32, 32);
  for (int N : {0, 1, 2}) {
    const auto b = make_bundle(N, g);
    const FlowState s = smooth_state(g, b, 5);
    const RealField chi = sample(g, [&](double x, double y) { return std::sin(2 * kPi * x / L) + 0.5 * std::cos(4 * kPi * y / L); });
    const FlowState t = apply_gauge(s, chi, g);
    EXPECT_NEAR(energy(t, g, b), energy(s, g, b), 1e-10 * energy(s, g, b));
    EXPECT_NEAR(flux(magnetic_field(t.A, b, g), g), flux(magnetic_field(s.A, b, g), g), 1e-10);
  }
}

TEST(ApplyGauge, InverseRestoresState) {
  const auto g = make_geometry(5, 5, 24, 24);
  const auto b = make_bundle(1, g);
  const FlowState s = rough_state(g, b, 8);
  const RealField chi = noise(g, 4);
  RealField minus = chi;
  for (auto& v : minus) v = -v;
  const FlowState r = apply_gauge(apply_gauge(s, chi, g), minus, g);
  EXPECT_LT(max_abs_diff(r.A.a1, s.A.a1), 1e-13);
  EXPECT_LT(max_abs_diff(r.A.a2, s.A.a2), 1e-13);
  EXPECT_LT(max_abs_diff(r.phi, s.phi), 1e-14);
}

TEST(RandomSection, RawNoiseIsReproducible) {
  const auto g = make_geometry(5, 5, 16, 16);
  const auto b = make_bundle(1, g);
  const ComplexField a = random_section(b, g, 42, 0);
  const ComplexField c = random_section(b, g, 42, 0);
  EXPECT_GT(l2_norm(a, g), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k], c[k]);
  const ComplexField d = random_section(b, g, 43, 0);
  EXPECT_GT(max_abs_diff(a, d), 0.1);
}

TEST(RandomSection, SmoothingReducesCovariantGradient) {
  const double L = 2 * kPi * std::sqrt(2.0);
  const auto g = make_geometry(L, L, 32, 32);
  const auto b = make_bundle(1, g);
  auto ratio = [&](int tau) {
    const ComplexField p = random_section(b, g, 7, tau);
    const auto [d1, d2] = covariant_derivative(p, OneForm(32, 32), b);
    return std::hypot(l2_norm(d1, g), l2_norm(d2, g)) / l2_norm(p, g);
  };
  EXPECT_LT(ratio(50), 0.5 * ratio(0));
}

TEST(RandomSection, TrivialBundleApproachesConstant) {
  const auto g = make_geometry(3, 3, 16, 16);
  const auto b = make_bundle(0, g);
  const ComplexField p = random_section(b, g, 1, 4000);
  complex mean = 0.0;
  for (auto v : p) mean += v;
  mean /= static_cast<double>(p.size());
  double dev = 0.0;
  for (auto v : p) dev = std::max(dev, std::abs(v - mean));
  EXPECT_GT(std::abs(mean), 0.0);
  EXPECT_LT(dev, 1e-6 * std::abs(mean));
}

TEST(RandomDivfreeOneform, Properties) {
  const auto g = make_geometry(2 * kPi, 4.0, 32, 24);
  const OneForm z = random_divfree_oneform(g, 3, 0.0);
  EXPECT_EQ(max_abs(z.a1), 0.0);
  EXPECT_EQ(max_abs(z.a2), 0.0);
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const OneForm A = random_divfree_oneform(g, seed, 0.3);
    EXPECT_LT(max_abs(div(A, g, Stencil::Lattice)), 1e-10);
    EXPECT_NEAR(l2_norm(A, g) / std::sqrt(g.area()), 0.3, 1e-12);
    const auto [m1, m2] = harmonic_part(A);
    EXPECT_NEAR(m1, 0.0, 1e-14);
    EXPECT_NEAR(m2, 0.0, 1e-14);
    const OneForm B = random_divfree_oneform(g, seed, 0.3);
    EXPECT_EQ(max_abs_diff(A.a1, B.a1), 0.0);
    EXPECT_EQ(max_abs_diff(A.a2, B.a2), 0.0);
  }
  EXPECT_THROW(random_divfree_oneform(g, 1, -1.0), ConfigError);
}
