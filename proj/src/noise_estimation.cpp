#include "widesense/noise_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "widesense/errors.hpp"
#include "widesense/fft.hpp"

namespace widesense::noise {

namespace {

constexpr double kPmfTolerance = 1e-9;
constexpr double kTieTolerance = 1e-12;

void check_pmf(const std::vector<double>& pmf) {
  if (pmf.empty()) throw DomainError("prior pmf is empty");
  double total = 0.0;
  for (const double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("prior pmf entries must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > kPmfTolerance) throw DomainError("prior pmf does not sum to 1");
}

}  // namespace

SubbandEnergies::SubbandEnergies(std::span<const double> raw, std::size_t samples_per_subband)
    : samples_(samples_per_subband) {
  if (raw.size() < 2) throw DomainError("need at least two subbands");
  if (samples_ == 0) throw DomainError("samples per subband must be positive");
  for (const double e : raw) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw DomainError("subband energies must be >= 0");
  }
  permutation_.resize(raw.size());
  std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
  std::stable_sort(permutation_.begin(), permutation_.end(),
                   [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
  energies_.reserve(raw.size());
  for (const auto i : permutation_) energies_.push_back(raw[i]);
}

void to_json(nlohmann::json& j, const PriorSpec& p) {
  switch (p.kind) {
    case PriorKind::kUniform:
      j = {{"kind", "uniform"}};
      break;
    case PriorKind::kTable:
      j = {{"kind", "table"}, {"pmf", p.pmf}};
      break;
    case PriorKind::kErlang:
      j = {{"kind", "erlang"}, {"shape", p.shape}, {"rate", p.rate}};
      break;
  }
}

void from_json(const nlohmann::json& j, PriorSpec& p) {
  if (!j.is_object()) throw DomainError("prior must be a JSON object");
  const auto kind = j.at("kind").get<std::string>();
  std::vector<std::string> allowed{"kind"};
  if (kind == "uniform") {
    p = PriorSpec{};
  } else if (kind == "table") {
    p = PriorSpec{};
    p.kind = PriorKind::kTable;
    p.pmf = j.at("pmf").get<std::vector<double>>();
    check_pmf(p.pmf);
    allowed.push_back("pmf");
  } else if (kind == "erlang") {
    p = PriorSpec{};
    p.kind = PriorKind::kErlang;
    p.shape = j.at("shape").get<int>();
    p.rate = j.at("rate").get<double>();
    if (p.shape < 1 || !(p.rate > 0.0)) throw DomainError("erlang prior needs shape >= 1, rate > 0");
    allowed.insert(allowed.end(), {"shape", "rate"});
  } else {
    throw DomainError("unknown prior kind '" + kind + "'");
  }
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw DomainError("unknown prior key '" + key + "'");
    }
  }
}

UsagePrior::UsagePrior(PriorKind kind, std::vector<double> pmf)
    : kind_(kind), pmf_(std::move(pmf)) {
  check_pmf(pmf_);
}

UsagePrior UsagePrior::uniform(std::size_t k) {
  if (k == 0) throw DomainError("prior over zero subbands");
  return UsagePrior(PriorKind::kUniform, std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

UsagePrior UsagePrior::table(std::vector<double> pmf) {
  return UsagePrior(PriorKind::kTable, std::move(pmf));
}

UsagePrior UsagePrior::erlang(int shape, double rate, std::size_t k) {
  if (shape < 1 || !(rate > 0.0) || !std::isfinite(rate)) {
    throw DomainError("erlang prior needs shape >= 1 and rate > 0");
  }
  if (k == 0) throw DomainError("prior over zero subbands");
  // log f(x) = n log(rate) + (n-1) log x - rate x - log((n-1)!)
  std::vector<double> log_density(k);
  for (std::size_t m = 1; m <= k; ++m) {
    const double x = static_cast<double>(m);
    log_density[m - 1] = shape * std::log(rate) + (shape - 1) * std::log(x) - rate * x -
                         std::lgamma(static_cast<double>(shape));
  }
  const double peak = *std::max_element(log_density.begin(), log_density.end());
  std::vector<double> pmf(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    pmf[i] = std::exp(log_density[i] - peak);
    total += pmf[i];
  }
  for (auto& p : pmf) p /= total;
  return UsagePrior(PriorKind::kErlang, std::move(pmf));
}

UsagePrior UsagePrior::resolve(const PriorSpec& spec, std::size_t k) {
  switch (spec.kind) {
    case PriorKind::kUniform:
      return uniform(k);
    case PriorKind::kErlang:
      return erlang(spec.shape, spec.rate, k);
    case PriorKind::kTable: {
      if (spec.pmf.size() > k) {
        throw DomainError("prior table has " + std::to_string(spec.pmf.size()) +
                          " entries but only " + std::to_string(k) + " subbands");
      }
      auto pmf = spec.pmf;
      pmf.resize(k, 0.0);
      return table(std::move(pmf));
    }
  }
  throw DomainError("unknown prior kind");
}

double UsagePrior::probability(std::size_t m) const {
  if (m == 0 || m > pmf_.size()) return 0.0;
  return pmf_[m - 1];
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kKnownPrior:
      return "known_prior";
    case Scenario::kKnownCount:
      return "known_count";
    case Scenario::kUnknownCount:
      return "unknown_count";
  }
  return "unknown";
}

SubbandPartition::SubbandPartition(std::vector<double> boundaries, double total_bandwidth)
    : boundaries_(std::move(boundaries)), total_bandwidth_(total_bandwidth) {
  if (boundaries_.size() < 2) throw DegeneratePartitionError("partition needs two boundaries");
  if (boundaries_.front() != 0.0 || std::abs(boundaries_.back() - total_bandwidth_) > 1e-12) {
    throw DomainError("partition must span [0, total_bandwidth]");
  }
  for (std::size_t i = 1; i < boundaries_.size(); ++i) {
    if (!(boundaries_[i] > boundaries_[i - 1])) {
      throw DomainError("partition boundaries must be strictly increasing");
    }
  }
}

double SubbandPartition::min_width() const noexcept {
  double w = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < boundaries_.size(); ++i) {
    w = std::min(w, boundaries_[i] - boundaries_[i - 1]);
  }
  return w;
}

std::size_t SubbandPartition::inferred_count() const noexcept {
  // Guard against widths like 0.1 + ulp turning 10 into 9.
  const auto k = static_cast<std::size_t>(std::floor(total_bandwidth_ / min_width() + 1e-9));
  return std::max<std::size_t>(k, 2);
}

SubbandEnergies subband_energies(std::span<const Complex> signal, std::size_t k) {
  if (k < 2) throw DomainError("need at least two subbands");
  if (signal.empty() || signal.size() % k != 0) {
    throw DomainError("signal length " + std::to_string(signal.size()) +
                      " is not divisible by subband count " + std::to_string(k));
  }
  const auto bins = fft::forward_unitary(signal);
  const std::size_t per = signal.size() / k;
  std::vector<double> raw(k, 0.0);
  for (std::size_t j = 0; j < bins.size(); ++j) raw[j / per] += std::norm(bins[j]);
  return SubbandEnergies(raw, per);
}

SubbandEnergies subband_energies(std::span<const Complex> signal,
                                 const SubbandPartition& partition) {
  if (signal.empty()) throw DomainError("empty signal");
  const auto bins = fft::forward_unitary(signal);
  const auto edges = partition.boundaries();
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const auto range = frequency_bins(edges[i], edges[i + 1], signal.size());
    if (range.first >= range.second) {
      throw DomainError("partition segment " + std::to_string(i) + " contains no DFT bins");
    }
    smallest = std::min(smallest, range.second - range.first);
    groups.push_back(range);
  }
  std::vector<double> raw;
  raw.reserve(groups.size());
  for (const auto& [lo, hi] : groups) {
    double e = 0.0;
    for (std::size_t j = lo; j < lo + smallest; ++j) e += std::norm(bins[j]);
    raw.push_back(e);
  }
  return SubbandEnergies(raw, smallest);
}

double glrt_objective(const SubbandEnergies& energies, std::size_t m, double prior_probability) {
  const auto e = energies.ascending();
  if (m < 1 || m > e.size()) throw DomainError("M outside 1..k");
  if (!(prior_probability > 0.0)) throw DomainError("objective needs P(M) > 0");
  if (!(e.front() > 0.0)) {
    throw DomainError("zero subband energy: log-likelihood undefined");
  }
  const double samples = static_cast<double>(energies.samples_per_subband());
  const double free_samples = static_cast<double>(m) * samples;
  double pooled = 0.0;
  for (std::size_t i = 0; i < m; ++i) pooled += e[i];
  double occupied = 0.0;
  for (std::size_t r = m; r < e.size(); ++r) occupied += std::log(e[r] / samples);
  return free_samples * std::log(pooled / free_samples) + samples * occupied -
         std::log(prior_probability);
}

std::size_t estimate_m(const SubbandEnergies& energies, const UsagePrior& prior) {
  const auto e = energies.ascending();
  const std::size_t k = e.size();
  if (prior.size() != k) {
    throw DomainError("prior covers " + std::to_string(prior.size()) + " counts, energies " +
                      std::to_string(k));
  }
  if (!(e.front() > 0.0)) throw DomainError("zero subband energy: log-likelihood undefined");
  const auto pmf = prior.pmf();
  const double p_max = *std::max_element(pmf.begin(), pmf.end());
  if (!(p_max > 0.0)) throw DomainError("prior assigns zero probability to every M");

  const double samples = static_cast<double>(energies.samples_per_subband());
  // Suffix sums of log(E_r / L) so each J(M) costs O(1).
  std::vector<double> tail(k + 1, 0.0);
  for (std::size_t r = k; r-- > 0;) tail[r] = tail[r + 1] + std::log(e[r] / samples);

  std::size_t best_m = 0;
  double best = std::numeric_limits<double>::infinity();
  double pooled = 0.0;
  for (std::size_t m = 1; m <= k; ++m) {
    pooled += e[m - 1];
    const double p = pmf[m - 1];
    if (!(p > 0.0)) continue;
    const double free_samples = static_cast<double>(m) * samples;
    // -log P(M) + log P_max: a constant shift that vanishes for a flat prior.
    const double j = free_samples * std::log(pooled / free_samples) + samples * tail[m] -
                     (std::log(p) - std::log(p_max));
    if (best_m == 0 || j <= best + kTieTolerance * std::max(1.0, std::abs(best))) {
      best = std::min(best, j);
      best_m = m;
    }
  }
  return best_m;
}

std::size_t estimate_m_uniform(const SubbandEnergies& energies) {
  return estimate_m(energies, UsagePrior::uniform(energies.count()));
}

NoiseEstimate noise_variance(const SubbandEnergies& energies, std::size_t m_hat) {
  const auto e = energies.ascending();
  if (m_hat < 1 || m_hat > e.size()) {
    throw DomainError("m_hat " + std::to_string(m_hat) + " outside 1.." + std::to_string(e.size()));
  }
  const double samples = static_cast<double>(energies.samples_per_subband());
  NoiseEstimate est;
  est.m_hat = m_hat;
  est.subband_count = e.size();
  double pooled = 0.0;
  for (std::size_t i = 0; i < m_hat; ++i) pooled += e[i];
  est.sigma2_hat = pooled / (static_cast<double>(m_hat) * samples);
  for (std::size_t r = m_hat; r < e.size(); ++r) est.occupied_variances.push_back(e[r] / samples);
  return est;
}

double min_energy_noise(const SubbandEnergies& energies) {
  return energies.ascending().front() / static_cast<double>(energies.samples_per_subband());
}

double min_energy_noise(std::span<const double> energies, std::size_t samples_per_subband) {
  if (energies.empty()) throw DomainError("no subband energies");
  if (samples_per_subband == 0) throw DomainError("samples per subband must be positive");
  return *std::min_element(energies.begin(), energies.end()) /
         static_cast<double>(samples_per_subband);
}

std::size_t infer_subband_count(const SubbandPartition& partition, double total_bandwidth) {
  if (std::abs(total_bandwidth - partition.total_bandwidth()) > 1e-12) {
    throw DomainError("bandwidth does not match the partition");
  }
  return partition.inferred_count();
}

NoiseEstimate estimate_noise_known_count(std::span<const Complex> signal, std::size_t k,
                                         const std::optional<PriorSpec>& prior) {
  const auto energies = subband_energies(signal, k);
  const std::size_t m_hat = prior ? estimate_m(energies, UsagePrior::resolve(*prior, k))
                                  : estimate_m_uniform(energies);
  auto est = noise_variance(energies, m_hat);
  est.scenario = prior ? Scenario::kKnownPrior : Scenario::kKnownCount;
  return est;
}

NoiseEstimate estimate_noise_scenario3(std::span<const Complex> signal,
                                       const PsdParameters& params,
                                       const std::optional<PriorSpec>& prior) {
  const auto psd = estimate_psd(signal, params.segment_length, params.overlap);
  const auto partition = detect_boundaries(psd, params.n_scales);
  const std::size_t k = infer_subband_count(partition, psd.total_bandwidth);
  const std::size_t usable = signal.size() / k * k;
  if (usable == 0) throw DegeneratePartitionError("signal shorter than the inferred subband count");
  auto est = estimate_noise_known_count(signal.first(usable), k, prior);
  est.scenario = Scenario::kUnknownCount;
  return est;
}

}  // namespace widesense::noise
