#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "widesense/wideband.hpp"

namespace widesense::noise {

/// Per-subband energies ||x_k||^2 held in ascending order.
class SubbandEnergies {
 public:
  /// `raw` in original subband order; each subband carries `samples_per_subband`
  /// samples. Requires at least two subbands and nonnegative finite energies.
  SubbandEnergies(std::span<const double> raw, std::size_t samples_per_subband);

  std::span<const double> ascending() const noexcept { return energies_; }
  std::size_t count() const noexcept { return energies_.size(); }
  std::size_t samples_per_subband() const noexcept { return samples_; }
  /// original_index()[i] is the original position of ascending()[i].
  std::span<const std::size_t> original_index() const noexcept { return permutation_; }

 private:
  std::vector<double> energies_;
  std::size_t samples_;
  std::vector<std::size_t> permutation_;
};

enum class PriorKind { kUniform, kTable, kErlang };

/// Prior over the number of unused subbands as written in a config file,
/// before the subband count is known:
///   {"kind":"uniform"} | {"kind":"table","pmf":[...]} | {"kind":"erlang","shape":2,"rate":0.5}
struct PriorSpec {
  PriorKind kind = PriorKind::kUniform;
  std::vector<double> pmf;  ///< table: P(M) for M = 1, 2, ...
  int shape = 1;
  double rate = 1.0;
};

void to_json(nlohmann::json& j, const PriorSpec& p);
/// Rejects unknown keys.
void from_json(const nlohmann::json& j, PriorSpec& p);

/// P(M) for M = 1..k.
class UsagePrior {
 public:
  static UsagePrior uniform(std::size_t k);
  /// pmf[M-1] = P(M); must sum to 1 within 1e-9.
  static UsagePrior table(std::vector<double> pmf);
  /// Erlang(shape, rate) density at M = 1..k, renormalized over {1..k}.
  static UsagePrior erlang(int shape, double rate, std::size_t k);
  /// A table shorter than k is padded with zeros; a longer one is an error.
  static UsagePrior resolve(const PriorSpec& spec, std::size_t k);

  PriorKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return pmf_.size(); }
  std::span<const double> pmf() const noexcept { return pmf_; }
  double probability(std::size_t m) const;  ///< P(M = m), m >= 1

 private:
  UsagePrior(PriorKind kind, std::vector<double> pmf);

  PriorKind kind_;
  std::vector<double> pmf_;
};

enum class Scenario { kKnownPrior, kKnownCount, kUnknownCount };

std::string to_string(Scenario s);

struct NoiseEstimate {
  double sigma2_hat = 0.0;
  std::size_t m_hat = 0;
  /// E_r / L for the subbands judged occupied, ascending.
  std::vector<double> occupied_variances;
  Scenario scenario = Scenario::kKnownCount;
  /// Number of subbands the estimate was computed over.
  std::size_t subband_count = 0;
};

/// Strictly increasing boundaries from 0 to total_bandwidth.
class SubbandPartition {
 public:
  SubbandPartition(std::vector<double> boundaries, double total_bandwidth);

  std::span<const double> boundaries() const noexcept { return boundaries_; }
  std::size_t segments() const noexcept { return boundaries_.size() - 1; }
  double total_bandwidth() const noexcept { return total_bandwidth_; }
  double min_width() const noexcept;
  std::size_t inferred_count() const noexcept;

 private:
  std::vector<double> boundaries_;
  double total_bandwidth_;
};

/// Equal-width mode: the unitary DFT of `signal` split into k contiguous
/// blocks of L = n / k bins. White noise of variance s2 gives E = L * s2.
SubbandEnergies subband_energies(std::span<const Complex> signal, std::size_t k);

/// Partitioned mode: bins grouped by partition segment; L is the smallest
/// group and larger groups keep their first L bins.
SubbandEnergies subband_energies(std::span<const Complex> signal, const SubbandPartition& partition);

/// Value of the GLRT objective
///   J(M) = M L log(S_M / (M L)) + L sum_{r>M} log(E_r / L) - log P(M)
/// where S_M is the sum of the M smallest energies.
double glrt_objective(const SubbandEnergies& energies, std::size_t m, double prior_probability);

/// argmin_M J(M) over M in 1..k with P(M) > 0. Near-ties (1e-12 relative)
/// resolve to the larger M.
std::size_t estimate_m(const SubbandEnergies& energies, const UsagePrior& prior);

/// estimate_m without the prior term.
std::size_t estimate_m_uniform(const SubbandEnergies& energies);

/// sigma2_hat = sum of the m_hat smallest energies / (m_hat L).
NoiseEstimate noise_variance(const SubbandEnergies& energies, std::size_t m_hat);

/// Smallest energy divided by L.
double min_energy_noise(const SubbandEnergies& energies);
double min_energy_noise(std::span<const double> energies, std::size_t samples_per_subband);

/// Multiscale edge product detector on the log-PSD. Dyadic Gaussian scales
/// 2^1..2^n_scales bins; peaks above mean + 2 std of the product become
/// boundaries; peaks closer than 2 * 2^n_scales bins merge to the stronger.
SubbandPartition detect_boundaries(const PsdEstimate& psd, std::size_t n_scales);

/// floor(total_bandwidth / min segment width), at least 2.
std::size_t infer_subband_count(const SubbandPartition& partition, double total_bandwidth);

struct PsdParameters {
  std::size_t segment_length = 256;
  double overlap = 0.5;
  std::size_t n_scales = 2;
};

/// Known subband count: equal-width energies, then estimate_m (with prior)
/// or estimate_m_uniform, then noise_variance.
NoiseEstimate estimate_noise_known_count(std::span<const Complex> signal, std::size_t k,
                                         const std::optional<PriorSpec>& prior = std::nullopt);

/// Unknown subband count: PSD, boundary detection, count inference, then the
/// known-count path. The signal tail is dropped so its length divides k.
NoiseEstimate estimate_noise_scenario3(std::span<const Complex> signal,
                                       const PsdParameters& params = {},
                                       const std::optional<PriorSpec>& prior = std::nullopt);

}  // namespace widesense::noise
