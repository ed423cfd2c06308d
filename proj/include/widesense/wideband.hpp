#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace widesense {

using Complex = std::complex<double>;
using ComplexSeries = std::vector<Complex>;

/// Decibels to a linear power ratio.
double db_to_linear(double db);

/// K cooperating receivers with channel gains h_i and common noise variance.
class ReceiverArray {
 public:
  ReceiverArray(std::vector<Complex> gains, double sigma2);

  /// Gains drawn i.i.d. CN(0, 1) from `seed`, then rescaled so that
  /// (sum |h_i|^2 / K) / sigma2 equals `snr_linear` exactly.
  static ReceiverArray with_snr(std::size_t k_receivers, double sigma2, double snr_linear,
                                std::uint64_t seed);

  std::size_t size() const noexcept { return gains_.size(); }
  std::span<const Complex> gains() const noexcept { return gains_; }
  double sigma2() const noexcept { return sigma2_; }
  double gain_energy() const noexcept;  ///< sum |h_i|^2
  double snr() const noexcept;          ///< (sum |h_i|^2 / K) / sigma2

 private:
  std::vector<Complex> gains_;
  double sigma2_;
};

/// K x N snapshot matrix, already scaled by 1/sqrt(N).
class SampleMatrix {
 public:
  explicit SampleMatrix(Eigen::MatrixXcd entries);

  const Eigen::MatrixXcd& entries() const noexcept { return entries_; }
  std::size_t receivers() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t samples() const noexcept { return static_cast<std::size_t>(entries_.cols()); }

 private:
  Eigen::MatrixXcd entries_;
};

/// y_i(n) = h_i s(n) + z_i(n) when occupied, z_i(n) otherwise, scaled by
/// 1/sqrt(N). s ~ CN(0, 1), z ~ CN(0, sigma2). Deterministic in `seed`.
SampleMatrix generate_narrowband_frame(const ReceiverArray& array, std::size_t n_samples,
                                       bool occupied, std::uint64_t seed);

struct Subband {
  double start = 0.0;
  double end = 0.0;
  bool occupied = false;
  /// In-band PSD level of the primary signal (same units as noise_sigma2).
  double power = 0.0;
};

/// Normalized-frequency layout of a wideband observation.
///
/// Subbands tile [0, total_bandwidth] in order. A primary of level `power`
/// adds `power` to the PSD inside its subband, so it contributes
/// power * width / 1 to the time-domain signal power.
///
/// JSON form:
///   {"total_bandwidth": 1.0, "noise_sigma2": 1.0,
///    "subbands": [{"start": 0.0, "end": 0.25, "occupied": true, "power": 3.16}, ...]}
struct SpectrumScene {
  double total_bandwidth = 1.0;
  std::vector<Subband> subbands;
  double noise_sigma2 = 1.0;

  /// Throws DomainError when the tiling, power or free-subband rules fail.
  void validate() const;

  /// `count` equal-width subbands over [0, 1]; entries of `occupied` mark busy
  /// subbands, which get power noise_sigma2 * snr_linear.
  static SpectrumScene equal_width(const std::vector<bool>& occupied, double noise_sigma2,
                                   double snr_linear);
};

void to_json(nlohmann::json& j, const Subband& s);
void from_json(const nlohmann::json& j, Subband& s);
void to_json(nlohmann::json& j, const SpectrumScene& s);
/// Rejects unknown keys and validates the scene.
void from_json(const nlohmann::json& j, SpectrumScene& s);

SpectrumScene load_scene(const std::filesystem::path& path);

/// First and one-past-last DFT bin of an n-point transform whose frequency
/// j/n lies in [start, end).
std::pair<std::size_t, std::size_t> frequency_bins(double start, double end, std::size_t n);

/// White CN(0, noise_sigma2) noise plus, per occupied subband, a Gaussian
/// process synthesized by masking a white spectrum to the subband.
ComplexSeries generate_wideband_signal(const SpectrumScene& scene, std::size_t n_total,
                                       std::uint64_t seed);

struct PsdEstimate {
  std::vector<double> freqs;  ///< j / segment_length, j = 0..segment_length-1
  std::vector<double> power;
  std::size_t segment_length = 0;
  double overlap = 0.0;
  double total_bandwidth = 1.0;

  std::size_t size() const noexcept { return power.size(); }
};

/// Welch estimate with a periodic Hann window. Normalized so white noise of
/// variance s2 gives E[power] = s2 in every bin.
PsdEstimate estimate_psd(std::span<const Complex> signal, std::size_t segment_length,
                         double overlap);

}  // namespace widesense
