#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "widesense/eigen_detector.hpp"
#include "widesense/noise_estimation.hpp"
#include "widesense/seeding.hpp"

namespace widesense::calibration {

enum class Sigma2Mode { kOracle, kEstimated };

std::string to_string(Sigma2Mode mode);
Sigma2Mode sigma2_mode_from_string(const std::string& name);

/// Companion wideband noise record used when sigma2_mode is kEstimated: the
/// noise variance of each frame is estimated from `record_length` samples of
/// a `subbands`-wide scene with `occupied` busy subbands at `snr_db`, using
/// the known-count estimator.
struct NoiseRecordConfig {
  std::size_t subbands = 32;
  std::size_t occupied = 24;
  double snr_db = -5.0;
  std::size_t record_length = 4096;
};

struct CalibrationConfig {
  std::size_t trials = 10000;
  double target_pfa = 0.1;
  std::uint64_t master_seed = 1;
  std::size_t k = 7;
  std::size_t n = 100;
  double sigma2 = 1.0;
  Sigma2Mode sigma2_mode = Sigma2Mode::kOracle;
  NoiseRecordConfig noise_record;
  /// Random stream the H0 frames are drawn from.
  std::uint64_t stream = stream_tag(Stream::kCalibrationH0);

  /// Throws DomainError unless trials >= 100 and 0 < target_pfa < 1.
  void validate() const;
};

/// Noise variance handed to a detector for one frame: sigma2 itself in
/// oracle mode, otherwise an estimate from a companion record drawn from
/// `seed`.
double frame_noise_variance(const CalibrationConfig& config, std::uint64_t seed);

/// Empirical H0 distribution of one detector statistic.
class CalibrationCurve {
 public:
  /// `per_trial[i]` is the statistic of trial i. Needs >= 100 finite values.
  CalibrationCurve(std::vector<double> per_trial, detect::DetectorKind kind,
                   CalibrationConfig config);

  std::span<const double> sorted() const noexcept { return sorted_; }
  std::span<const double> per_trial() const noexcept { return per_trial_; }
  std::size_t size() const noexcept { return sorted_.size(); }
  detect::DetectorKind kind() const noexcept { return kind_; }
  const CalibrationConfig& config() const noexcept { return config_; }

 private:
  std::vector<double> per_trial_;
  std::vector<double> sorted_;
  detect::DetectorKind kind_;
  CalibrationConfig config_;
};

/// `config.trials` noise-only frames, trial i seeded with
/// derive_seed(master_seed, stream, i).
CalibrationCurve simulate_h0(const CalibrationConfig& config, detect::DetectorKind kind);

/// Fraction of H0 statistics strictly above alpha.
double pfa_at(const CalibrationCurve& curve, double alpha);

struct Threshold {
  double alpha = 0.0;
  /// Every calibration sample is identical; alpha is that value.
  bool degenerate = false;
};

/// Empirical (1 - target_pfa) quantile with linear interpolation between
/// order statistics, nudged if needed so |pfa_at(alpha) - target| <= 1/count.
Threshold threshold_for(const CalibrationCurve& curve, double target_pfa);

/// Writes `<stem>.csv` (header `trial,statistic`, %.17g values in trial
/// order) and `<stem>.json` (detector, K, N, sigma2, sigma2_mode,
/// master_seed, trials, target_pfa, noise record).
void save_curve(const CalibrationCurve& curve, const std::filesystem::path& csv_path);

/// Reads a curve written by save_curve. Reloaded values are bit-identical.
CalibrationCurve load_curve(const std::filesystem::path& csv_path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

nlohmann::json curve_metadata(const CalibrationCurve& curve);

}  // namespace widesense::calibration
