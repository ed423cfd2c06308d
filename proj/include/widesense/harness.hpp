#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "widesense/calibration.hpp"
#include "widesense/eigen_detector.hpp"
#include "widesense/errors.hpp"
#include "widesense/noise_estimation.hpp"
#include "widesense/result_table.hpp"

namespace widesense::harness {

/// Invalid or conflicting experiment configuration (CLI exit code 2).
class ConfigError : public DomainError {
 public:
  explicit ConfigError(const std::string& what) : DomainError(what) {}
};

enum class Experiment { kMpCheck, kNoiseErrorEqual, kNoiseErrorAdaptive, kPfaCurve, kRoc, kPdVsSnr };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

/// Default wideband scene used by the noise-error experiments when no scene
/// file is given: `subbands` equal subbands of which `free` (chosen per
/// trial) are unused, the rest at snr_db[0] in-band SNR.
struct WidebandSetup {
  std::size_t subbands = 32;
  std::size_t free = 8;
  std::size_t n_total = 4096;
};

/// One experiment run; every field has a JSON key of the same name.
struct ExperimentSpec {
  Experiment experiment = Experiment::kRoc;
  std::size_t K = 7;
  std::size_t N = 100;
  std::size_t trials = 10000;              ///< evaluation trials
  std::size_t calibration_trials = 10000;  ///< H0 calibration trials
  std::vector<double> snr_db;
  std::vector<std::size_t> subband_counts{4, 8, 16, 32, 64};
  std::vector<double> target_pfa;
  std::uint64_t master_seed = 1;
  std::string output;
  std::optional<std::string> scene;
  std::optional<noise::PriorSpec> prior;
  double sigma2 = 1.0;
  calibration::Sigma2Mode sigma2_mode = calibration::Sigma2Mode::kOracle;
  std::vector<std::pair<std::size_t, std::size_t>> dims;  ///< (K, N) pairs for mp-check
  std::vector<detect::DetectorKind> detectors{detect::DetectorKind::kMpEdge,
                                              detect::DetectorKind::kEnergy,
                                              detect::DetectorKind::kAgm};
  noise::PsdParameters psd;
  calibration::NoiseRecordConfig noise_record;
  WidebandSetup wideband;
  std::optional<std::string> calibration_cache;  ///< directory for cached H0 curves

  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// Default spec for an experiment (experiment-specific SNR and Pfa grids).
ExperimentSpec default_spec(Experiment e);

/// Overlays `config` on default_spec(e). Unknown keys are a ConfigError, as is
/// an "experiment" key that disagrees with `e`.
ExperimentSpec parse_spec(const nlohmann::json& config, Experiment e);

nlohmann::json to_json(const ExperimentSpec& spec);

/// FNV-1a 64 of the canonical JSON of the spec without its output path.
std::string config_hash(const ExperimentSpec& spec);

ResultTable run_mp_check(const ExperimentSpec& spec);

enum class NoiseErrorMode { kEqual, kAdaptive };
ResultTable run_noise_error(const ExperimentSpec& spec, NoiseErrorMode mode);

ResultTable run_pfa_curve(const ExperimentSpec& spec);
ResultTable run_roc(const ExperimentSpec& spec);
ResultTable run_pd_vs_snr(const ExperimentSpec& spec);

/// Dispatches on spec.experiment and stamps provenance.
ResultTable run_experiment(const ExperimentSpec& spec);

/// Calibration config shared by the detector experiments.
calibration::CalibrationConfig calibration_config(const ExperimentSpec& spec, std::size_t trials,
                                                  std::uint64_t stream);

}  // namespace widesense::harness
