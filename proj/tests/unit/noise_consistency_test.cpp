#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "widesense/noise_estimation.hpp"
#include "widesense/seeding.hpp"
#include "widesense/wideband.hpp"

using namespace widesense;

// True M unused subbands, the rest 10 dB above noise, L = 256 samples each.
TEST(NoiseConsistency, RecoversTrueCountAtHighSnr) {
  const std::size_t k = 8, l = 256;
  int recovered = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(77, 0, static_cast<std::uint64_t>(t)));
    const std::size_t m = 1 + rng() % (k - 1);
    std::vector<bool> busy(k, true);
    for (std::size_t i = 0; i < m; ++i) busy[i] = false;
    std::shuffle(busy.begin(), busy.end(), rng);
    const auto scene = SpectrumScene::equal_width(busy, 1.0, 10.0);
    const auto x = generate_wideband_signal(scene, k * l, rng());
    recovered += noise::estimate_m_uniform(noise::subband_energies(x, k)) == m;
  }
  RecordProperty("recovered", recovered);
  EXPECT_GE(recovered, trials * 9 / 10) << recovered << " of " << trials;
}
