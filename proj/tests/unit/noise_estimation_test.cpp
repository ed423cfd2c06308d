#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "widesense/errors.hpp"
#include "widesense/fft.hpp"
#include "widesense/noise_estimation.hpp"
#include "widesense/wideband.hpp"

using namespace widesense;
using namespace widesense::noise;

namespace {

SubbandEnergies energies_of(std::vector<double> e, std::size_t l = 1) {
  return SubbandEnergies(e, l);
}

// Negative profile log-likelihood of L complex Gaussian samples per subband
// with the M smallest energies sharing one variance, every other subband
// its own, each variance at its maximum-likelihood value.
long double negative_log_likelihood(const std::vector<double>& sorted, std::size_t l,
                                    std::size_t m) {
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double ll = static_cast<long double>(l);
  long double pooled = 0.0L;
  for (std::size_t i = 0; i < m; ++i) pooled += sorted[i];
  const long double v0 = pooled / (static_cast<long double>(m) * ll);
  long double nll = static_cast<long double>(m) * ll * (std::log(pi * v0) + 1.0L);
  for (std::size_t r = m; r < sorted.size(); ++r) {
    const long double vr = sorted[r] / ll;
    nll += ll * (std::log(pi * vr) + 1.0L);
  }
  return nll;
}

std::size_t oracle_argmin(std::vector<double> energies, std::size_t l,
                          const std::vector<double>& pmf) {
  std::sort(energies.begin(), energies.end());
  std::size_t best_m = 0;
  long double best = 0.0L;
  for (std::size_t m = 1; m <= energies.size(); ++m) {
    if (pmf[m - 1] <= 0.0) continue;
    const long double j = negative_log_likelihood(energies, l, m) - std::log((long double)pmf[m - 1]);
    if (best_m == 0 || j <= best + 1e-12L * std::max(1.0L, std::abs(best))) {
      best = best_m == 0 ? j : std::min(best, j);
      best_m = m;
    }
  }
  return best_m;
}

std::vector<double> random_pmf(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pmf(k);
  for (auto& p : pmf) p = u(rng) < 0.2 ? 0.0 : u(rng);
  if (std::accumulate(pmf.begin(), pmf.end(), 0.0) == 0.0) pmf[0] = 1.0;
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (auto& p : pmf) p /= total;
  return pmf;
}

}  // namespace

TEST(SubbandEnergies, SortsAndRemembersOrder) {
  const auto e = energies_of({5, 3, 9});
  EXPECT_EQ(std::vector<double>(e.ascending().begin(), e.ascending().end()),
            (std::vector<double>{3, 5, 9}));
  EXPECT_EQ(std::vector<std::size_t>(e.original_index().begin(), e.original_index().end()),
            (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_THROW(energies_of({1.0}), DomainError);
  EXPECT_THROW(energies_of({1.0, -1.0}), DomainError);
  EXPECT_THROW(energies_of({1.0, 2.0}, 0), DomainError);
}

TEST(SubbandEnergies, ZeroSignalAndIndivisibleLength) {
  const ComplexSeries zeros(64);
  const auto e = subband_energies(zeros, 4);
  for (const double v : e.ascending()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(e.samples_per_subband(), 16u);
  EXPECT_THROW(subband_energies(zeros, 5), DomainError);
}

TEST(SubbandEnergies, WhiteNoiseExpectation) {
  const auto scene = SpectrumScene::equal_width(std::vector<bool>(8, false), 1.0, 1.0);
  std::vector<double> sums(8, 0.0);
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const auto x = generate_wideband_signal(scene, 512, t);
    const auto e = subband_energies(x, 8);
    for (std::size_t i = 0; i < 8; ++i) sums[e.original_index()[i]] += e.ascending()[i];
  }
  // E = L sigma2 = 64; the mean of 200 draws has relative sd 1/sqrt(64 * 200).
  for (const double s : sums) EXPECT_NEAR(s / trials, 64.0, 64.0 * 0.05);
}

TEST(SubbandEnergies, OccupiedSubbandIsLoudest) {
  std::vector<bool> busy(8, false);
  busy[5] = true;
  const auto scene = SpectrumScene::equal_width(busy, 1.0, 10.0);
  int hits = 0;
  for (int t = 0; t < 100; ++t) {
    const auto e = subband_energies(generate_wideband_signal(scene, 1024, 1000 + t), 8);
    hits += e.original_index().back() == 5;
  }
  EXPECT_GE(hits, 99);
}

TEST(SubbandEnergies, PartitionedModeUsesSmallestGroup) {
  ComplexSeries x(16, Complex(0.0, 0.0));
  // A unit tone in bin 12 lands in the second segment.
  for (std::size_t t = 0; t < 16; ++t) x[t] = std::polar(1.0, 2.0 * std::numbers::pi * 12.0 * t / 16.0);
  const SubbandPartition partition({0.0, 0.75, 1.0}, 1.0);
  const auto e = subband_energies(x, partition);
  EXPECT_EQ(e.samples_per_subband(), 4u);
  EXPECT_NEAR(e.ascending().back(), 16.0, 1e-9);
  EXPECT_NEAR(e.ascending().front(), 0.0, 1e-9);
}

TEST(EstimateM, SpecExamples) {
  EXPECT_EQ(estimate_m(energies_of({1, 1, 100, 100}), UsagePrior::uniform(4)), 2u);
  EXPECT_EQ(estimate_m_uniform(energies_of({1, 1, 100, 100})), 2u);
  EXPECT_EQ(estimate_m(energies_of({7, 1, 100, 3}), UsagePrior::table({0, 0, 1, 0})), 3u);
  EXPECT_EQ(estimate_m_uniform(energies_of({5, 5, 5, 5, 5})), 5u);
  EXPECT_EQ(estimate_m_uniform(energies_of({1, 1e6})), 1u);
  EXPECT_EQ(estimate_m_uniform(energies_of({1, 2, 4, 8})),
            oracle_argmin({1, 2, 4, 8}, 1, std::vector<double>(4, 0.25)));
}

TEST(EstimateM, Errors) {
  EXPECT_THROW(estimate_m_uniform(energies_of({0, 1})), DomainError);
  EXPECT_THROW(estimate_m(energies_of({1, 2}), UsagePrior::uniform(3)), DomainError);
  EXPECT_THROW(UsagePrior::table({0.5, 0.4}), DomainError);
}

TEST(EstimateM, MatchesLikelihoodOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> pick_k(2, 8), pick_l(1, 4), pick_kind(0, 2);
  std::normal_distribution<double> spread(0.0, 1.5);
  std::uniform_real_distribution<double> rate(0.1, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = pick_k(rng), l = pick_l(rng);
    std::vector<double> raw(k);
    for (auto& v : raw) v = std::exp(spread(rng));
    const auto e = SubbandEnergies(raw, l);

    std::vector<double> pmf;
    std::size_t got = 0;
    switch (pick_kind(rng)) {
      case 0:
        pmf.assign(k, 1.0 / static_cast<double>(k));
        got = estimate_m_uniform(e);
        ASSERT_EQ(got, estimate_m(e, UsagePrior::uniform(k)));
        break;
      case 1:
        pmf = random_pmf(rng, k);
        got = estimate_m(e, UsagePrior::table(pmf));
        break;
      default: {
        const int shape = 1 + static_cast<int>(rng() % 4);
        const double r = rate(rng);
        const auto prior = UsagePrior::erlang(shape, r, k);
        pmf.resize(k);
        // Independent discretization: Erlang density at M, normalized.
        double total = 0.0;
        for (std::size_t m = 1; m <= k; ++m) {
          const double x = static_cast<double>(m);
          pmf[m - 1] = std::pow(r, shape) * std::pow(x, shape - 1) * std::exp(-r * x) /
                       std::tgamma(static_cast<double>(shape));
          total += pmf[m - 1];
        }
        for (auto& p : pmf) p /= total;
        for (std::size_t i = 0; i < k; ++i) ASSERT_NEAR(prior.pmf()[i], pmf[i], 1e-12);
        got = estimate_m(e, prior);
      }
    }
    ASSERT_EQ(got, oracle_argmin(raw, l, pmf)) << "trial " << trial;
  }
}

TEST(EstimateM, PermutationAndScaleInvariance) {
  std::mt19937_64 rng(7);
  std::exponential_distribution<double> draw(1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(6);
    for (auto& v : raw) v = draw(rng) + 1e-3;
    const auto prior = UsagePrior::table(random_pmf(rng, 6));
    const auto base = estimate_m(SubbandEnergies(raw, 3), prior);
    const auto base_sigma = noise_variance(SubbandEnergies(raw, 3), base).sigma2_hat;
    auto shuffled = raw;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(estimate_m(SubbandEnergies(shuffled, 3), prior), base);
    EXPECT_EQ(noise_variance(SubbandEnergies(shuffled, 3), base).sigma2_hat, base_sigma);

    auto scaled = raw;
    for (auto& v : scaled) v *= 37.5;
    EXPECT_EQ(estimate_m_uniform(SubbandEnergies(scaled, 3)),
              estimate_m_uniform(SubbandEnergies(raw, 3)));
  }
}

TEST(NoiseVariance, Examples) {
  const auto e = energies_of({4, 2});
  EXPECT_DOUBLE_EQ(noise_variance(e, 2).sigma2_hat, 3.0);
  const auto one = noise_variance(e, 1);
  EXPECT_DOUBLE_EQ(one.sigma2_hat, 2.0);
  EXPECT_EQ(one.occupied_variances, std::vector<double>{4.0});
  EXPECT_EQ(noise_variance(energies_of({0, 0, 0}), 3).sigma2_hat, 0.0);
  EXPECT_THROW(noise_variance(e, 0), DomainError);
  EXPECT_THROW(noise_variance(e, 3), DomainError);
}

TEST(NoiseVariance, MeanOfSmallestIdentity) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.1, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> raw(10);
    for (auto& v : raw) v = u(rng);
    const auto e = SubbandEnergies(raw, 5);
    const auto m = estimate_m(e, UsagePrior::erlang(2, 0.3, 10));
    auto sorted = raw;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += sorted[i] / 5.0;
    mean /= static_cast<double>(m);
    EXPECT_NEAR(noise_variance(e, m).sigma2_hat, mean, 1e-12 * mean);
  }
}

TEST(MinEnergyNoise, Examples) {
  EXPECT_DOUBLE_EQ(min_energy_noise(energies_of({5, 3, 9})), 3.0);
  const std::vector<double> single{4.0};
  EXPECT_DOUBLE_EQ(min_energy_noise(single, 2), 2.0);
}

TEST(MinEnergyNoise, BiasMatchesGammaOrderStatistic) {
  // Minimum of k white-noise subband energies: each is Gamma(L, sigma2 / L)
  // per sample, so the oracle draws gamma variates directly.
  const std::size_t k = 8, l = 32;
  const int trials = 2000;
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> gamma(static_cast<double>(l), 1.0 / static_cast<double>(l));
  double oracle = 0.0;
  for (int t = 0; t < 20000; ++t) {
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) mn = std::min(mn, gamma(rng));
    oracle += mn;
  }
  oracle /= 20000.0;

  const auto scene = SpectrumScene::equal_width(std::vector<bool>(k, false), 1.0, 1.0);
  double measured = 0.0;
  for (int t = 0; t < trials; ++t) {
    measured += min_energy_noise(subband_energies(generate_wideband_signal(scene, k * l, t), k));
  }
  measured /= trials;
  EXPECT_LT(oracle, 0.9);
  EXPECT_NEAR(measured, oracle, 0.015);
}

TEST(UsagePrior, ResolveAndJson) {
  const auto spec = nlohmann::json::parse(R"({"kind":"table","pmf":[0.5,0.5]})").get<PriorSpec>();
  const auto padded = UsagePrior::resolve(spec, 4);
  EXPECT_EQ(padded.size(), 4u);
  EXPECT_EQ(padded.probability(3), 0.0);
  EXPECT_THROW(UsagePrior::resolve(spec, 1), DomainError);

  const auto erl = nlohmann::json::parse(R"({"kind":"erlang","shape":2,"rate":0.5})").get<PriorSpec>();
  const auto p = UsagePrior::resolve(erl, 6);
  EXPECT_NEAR(std::accumulate(p.pmf().begin(), p.pmf().end(), 0.0), 1.0, 1e-12);
  // Mode of Erlang(2, 0.5) is at (shape - 1) / rate = 2.
  EXPECT_EQ(std::max_element(p.pmf().begin(), p.pmf().end()) - p.pmf().begin(), 1);
  EXPECT_EQ(nlohmann::json(erl).get<PriorSpec>().rate, 0.5);

  EXPECT_THROW(nlohmann::json::parse(R"({"kind":"uniform","x":1})").get<PriorSpec>(), DomainError);
  EXPECT_THROW(nlohmann::json::parse(R"({"kind":"poisson"})").get<PriorSpec>(), DomainError);
  EXPECT_THROW(UsagePrior::erlang(0, 1.0, 4), DomainError);
}

TEST(KnownCount, UsesPriorWhenGiven) {
  std::vector<bool> busy(8, false);
  busy[1] = busy[4] = busy[6] = true;
  const auto scene = SpectrumScene::equal_width(busy, 2.0, 10.0);
  const auto x = generate_wideband_signal(scene, 8 * 256, 3);
  const auto uniform = estimate_noise_known_count(x, 8);
  EXPECT_EQ(uniform.scenario, Scenario::kKnownCount);
  EXPECT_EQ(uniform.subband_count, 8u);
  PriorSpec forced;
  forced.kind = PriorKind::kTable;
  forced.pmf = {0, 0, 0, 0, 1, 0, 0, 0};
  const auto with_prior = estimate_noise_known_count(x, 8, forced);
  EXPECT_EQ(with_prior.scenario, Scenario::kKnownPrior);
  EXPECT_EQ(with_prior.m_hat, 5u);
  EXPECT_NEAR(with_prior.sigma2_hat, 2.0, 0.3);
}

TEST(GlrtObjective, NondecreasingInMWithoutPrior) {
  // Concavity of log makes pooling one more subband never cheaper, which is
  // why the flat-prior argmin sits at M = 1 for continuous data.
  std::mt19937_64 rng(31);
  std::exponential_distribution<double> draw(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(12);
    for (auto& v : raw) v = draw(rng) + 1e-6;
    const auto e = SubbandEnergies(raw, 16);
    for (std::size_t m = 1; m < 12; ++m) {
      const double a = glrt_objective(e, m, 1.0), b = glrt_objective(e, m + 1, 1.0);
      EXPECT_GE(b, a - 1e-9 * std::abs(a));
    }
    EXPECT_EQ(estimate_m_uniform(e), 1u);
  }
}
