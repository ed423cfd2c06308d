#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "widesense/eigen_detector.hpp"
#include "widesense/errors.hpp"
#include "widesense/rmt.hpp"
#include "widesense/wideband.hpp"

using namespace widesense;
using rmt::MarchenkoPasturLaw;

namespace {

// Brute-force midpoint rule after t = a + (hi - a) u^2, which removes the
// 1/sqrt(t) blow-up at a = 0 when s = 1.
double brute_force_mass(double sigma2, double ratio, double upper, std::size_t steps = 2'000'000) {
  const auto [a, b] = rmt::mp_support(sigma2, ratio);
  const double hi = std::min(upper, b);
  if (hi <= a) return 0.0;
  const double h = 1.0 / static_cast<double>(steps);
  double total = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double u = (static_cast<double>(i) + 0.5) * h;
    const double t = a + (hi - a) * u * u;
    const double jacobian = 2.0 * (hi - a) * u;
    total += jacobian * std::sqrt((t - a) * (b - t)) / (2.0 * std::numbers::pi * ratio * sigma2 * t);
  }
  return total * h;
}

}  // namespace

TEST(MpSupport, HandEvaluatedEdges) {
  const auto [a, b] = rmt::mp_support(1.0, 0.25);
  EXPECT_NEAR(a, 0.25, 1e-15);
  EXPECT_NEAR(b, 2.25, 1e-15);

  const auto [a4, b4] = rmt::mp_support(4.0, 1.0);
  EXPECT_DOUBLE_EQ(a4, 0.0);
  EXPECT_DOUBLE_EQ(b4, 16.0);
}

TEST(MpSupport, DegenerateRatioCollapsesToSigma2) {
  const auto [a, b] = rmt::mp_support(1.0, 1e-12);
  EXPECT_NEAR(a, 1.0, 1e-5);
  EXPECT_NEAR(b, 1.0, 1e-5);
}

TEST(MpSupport, RejectsNonPositiveInputs) {
  EXPECT_THROW(rmt::mp_support(0.0, 0.5), DomainError);
  EXPECT_THROW(rmt::mp_support(-1.0, 0.5), DomainError);
  EXPECT_THROW(rmt::mp_support(1.0, 0.0), DomainError);
  EXPECT_THROW(MarchenkoPasturLaw(1.0, -2.0), DomainError);
}

TEST(MpSupport, WidthIdentity) {
  for (const double s2 : {0.1, 1.0, 7.5}) {
    for (const double ratio : {0.01, 0.1, 0.5, 1.0, 2.0, 9.0}) {
      const auto [a, b] = rmt::mp_support(s2, ratio);
      const double width = 4.0 * s2 * std::sqrt(ratio);
      EXPECT_NEAR(b - a, width, 1e-12 * width);
      EXPECT_LE(0.0, a);
      EXPECT_LE(a, b);
    }
  }
}

TEST(MpDensity, HandEvaluatedInteriorPoint) {
  const MarchenkoPasturLaw law(1.0, 1.0);
  EXPECT_NEAR(rmt::mp_density(law, 3.0), std::sqrt(3.0) / (6.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(rmt::mp_density(law, 3.0), 0.0919, 1e-4);
}

TEST(MpDensity, ZeroOutsideSupport) {
  const MarchenkoPasturLaw law(1.0, 0.25);
  EXPECT_EQ(rmt::mp_density(law, 3.0), 0.0);
  EXPECT_EQ(rmt::mp_density(law, 0.1), 0.0);
  EXPECT_EQ(rmt::mp_density(law, 0.25), 0.0);
  EXPECT_EQ(rmt::mp_density(law, 2.25), 0.0);
  EXPECT_THROW(rmt::mp_density(law, -0.1), DomainError);
}

TEST(MpDensity, NormalizationWithAtom) {
  for (const auto& [s2, ratio] : std::vector<std::pair<double, double>>{{2.0, 0.5}, {1.0, 2.0}, {0.5, 4.0}}) {
    const MarchenkoPasturLaw law(s2, ratio);
    const double total = brute_force_mass(s2, ratio, law.upper_edge()) + rmt::mp_atom_mass(law);
    EXPECT_NEAR(total, 1.0, 1e-6) << "sigma2=" << s2 << " s=" << ratio;
  }
}

TEST(MpAtomMass, Values) {
  EXPECT_EQ(rmt::mp_atom_mass(MarchenkoPasturLaw(1.0, 0.5)), 0.0);
  EXPECT_DOUBLE_EQ(rmt::mp_atom_mass(MarchenkoPasturLaw(1.0, 2.0)), 0.5);
  EXPECT_EQ(rmt::mp_atom_mass(MarchenkoPasturLaw(1.0, 1.0)), 0.0);
}

TEST(MpCdf, EndpointsAndErrors) {
  for (const double ratio : {0.1, 0.25, 1.0, 2.0}) {
    const MarchenkoPasturLaw law(1.5, ratio);
    EXPECT_DOUBLE_EQ(rmt::mp_cdf(law, law.lower_edge()), law.atom_mass());
    EXPECT_NEAR(rmt::mp_cdf(law, law.upper_edge()), 1.0, 1e-6);
    EXPECT_NEAR(rmt::mp_cdf(law, 10.0 * law.upper_edge()), 1.0, 1e-6);
    EXPECT_THROW(rmt::mp_cdf(law, -1.0), DomainError);
  }
}

TEST(MpCdf, MatchesBruteForceQuadrature) {
  for (const auto& [s2, ratio] : std::vector<std::pair<double, double>>{{1.0, 1.0}, {1.0, 0.25}, {2.0, 3.0}}) {
    const MarchenkoPasturLaw law(s2, ratio);
    for (const double frac : {0.1, 0.3, 0.5, 0.77, 0.95}) {
      const double t = law.lower_edge() + frac * (law.upper_edge() - law.lower_edge());
      const double expected = law.atom_mass() + brute_force_mass(s2, ratio, t);
      EXPECT_NEAR(rmt::mp_cdf(law, t), expected, 1e-6) << "s=" << ratio << " t=" << t;
    }
  }
}

TEST(MpCdf, UnitRatioAtTwo) {
  // Brute-force value; closed form 1/2 + 1/pi. The s = 1 density is not
  // symmetric, so this is not the median.
  const MarchenkoPasturLaw law(1.0, 1.0);
  const double oracle = brute_force_mass(1.0, 1.0, 2.0);
  EXPECT_NEAR(oracle, 0.5 + 1.0 / std::numbers::pi, 1e-6);
  EXPECT_NEAR(rmt::mp_cdf(law, 2.0), oracle, 1e-6);
}

TEST(MpCdf, MonotoneAndDensityNonnegative) {
  for (const double ratio : {0.05, 0.5, 1.0, 3.0}) {
    const MarchenkoPasturLaw law(0.7, ratio);
    double prev = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double t = 1.2 * law.upper_edge() * i / 400.0;
      const double c = law.cdf(t);
      EXPECT_GE(c, prev - 1e-12);
      EXPECT_GE(law.density(t), 0.0);
      if (t < law.lower_edge() || t > law.upper_edge()) EXPECT_EQ(law.density(t), 0.0);
      prev = c;
    }
  }
}

TEST(BuildEsd, SortsAndClamps) {
  const std::vector<double> raw{3.0, 1.0, 2.0};
  const auto esd = rmt::build_esd(raw);
  EXPECT_EQ(std::vector<double>(esd.values().begin(), esd.values().end()),
            (std::vector<double>{1.0, 2.0, 3.0}));

  const std::vector<double> zeros{0.0, 0.0};
  const auto z = rmt::build_esd(zeros);
  EXPECT_EQ(z.cdf(0.0), 1.0);

  const std::vector<double> tiny{-1e-12, 5.0};
  const auto c = rmt::build_esd(tiny);
  EXPECT_EQ(c.values()[0], 0.0);
  EXPECT_EQ(c.values()[1], 5.0);
}

TEST(BuildEsd, Errors) {
  EXPECT_THROW(rmt::build_esd(std::vector<double>{}), DomainError);
  EXPECT_THROW(rmt::build_esd(std::vector<double>{1.0, -1e-6}), DomainError);
}

TEST(BuildEsd, CdfIsMonotoneStep) {
  const std::vector<double> raw{0.5, 0.5, 1.0, 4.0};
  const auto esd = rmt::build_esd(raw);
  EXPECT_EQ(esd.cdf(0.49), 0.0);
  EXPECT_EQ(esd.cdf(0.5), 0.5);
  EXPECT_EQ(esd.cdf(3.0), 0.75);
  EXPECT_EQ(esd.cdf(4.0), 1.0);
}

TEST(KsDistance, QuantileConstructionIsClose) {
  const MarchenkoPasturLaw law(1.0, 0.25);
  const std::size_t n = 1000;
  std::vector<double> values;
  for (std::size_t i = 1; i <= n; ++i) values.push_back(law.quantile((i - 0.5) / n));
  EXPECT_LE(rmt::ks_distance(rmt::build_esd(values), law), 1.0 / n + 1e-3);
}

TEST(KsDistance, AllMassAtUpperEdge) {
  const MarchenkoPasturLaw law(1.0, 0.25);
  const std::vector<double> values(20, law.upper_edge());
  // Just below b the law has (almost) all its mass while the ESD has none.
  EXPECT_NEAR(rmt::ks_distance(rmt::build_esd(values), law), 1.0, 1e-6);
}

TEST(KsDistance, SinglePointAtMedian) {
  const MarchenkoPasturLaw law(2.0, 0.4);
  const std::vector<double> values{law.quantile(0.5)};
  EXPECT_NEAR(rmt::ks_distance(rmt::build_esd(values), law), 0.5, 1e-6);
}

TEST(KsDistance, ScaleEquivariance) {
  const MarchenkoPasturLaw law(1.0, 0.3);
  std::vector<double> values;
  for (int i = 0; i < 37; ++i) values.push_back(0.2 + 0.07 * i + 0.01 * std::sin(i));
  const double base = rmt::ks_distance(rmt::build_esd(values), law);
  for (const double c : {0.01, 3.0, 250.0}) {
    std::vector<double> scaled(values);
    for (auto& v : scaled) v *= c;
    EXPECT_NEAR(rmt::ks_distance(rmt::build_esd(scaled), MarchenkoPasturLaw(c, 0.3)), base, 1e-10);
  }
}

TEST(KsDistance, NoiseOnlyEigenvaluesFollowTheLaw) {
  // Reduced-size version of the 100-trial acceptance run.
  const std::size_t k = 50, n = 500;
  const MarchenkoPasturLaw law(1.0, static_cast<double>(k) / n);
  const ReceiverArray silent(std::vector<Complex>(k), 1.0);
  int good = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const auto frame = generate_narrowband_frame(silent, n, false, 1000 + t);
    const auto spectrum = detect::hermitian_eigenvalues(detect::sample_covariance(frame));
    const auto esd = rmt::build_esd(spectrum.values);
    if (rmt::ks_distance(esd, law) < 0.07) ++good;
    EXPECT_GE(rmt::fraction_in_support(esd, law, 0.05 * law.upper_edge()), 0.99);
  }
  EXPECT_GE(good, 19);
}
