#include "widesense/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>

#include "widesense/rmt.hpp"
#include "widesense/seeding.hpp"

namespace widesense::harness {

namespace {

using calibration::CalibrationConfig;
using calibration::CalibrationCurve;
using detect::DetectorKind;

constexpr std::uint64_t kGainSalt = 0x6761696e735f6821ULL;
constexpr std::uint64_t kSignalSalt = 0x7369676e616c5f77ULL;
constexpr double kSupportMarginFraction = 0.05;
constexpr std::size_t kPfaCurvePoints = 101;

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "experiment", "K",           "N",           "trials",      "calibration_trials",
      "snr_db",     "subband_counts", "target_pfa", "master_seed", "output",
      "scene",      "prior",       "sigma2",      "sigma2_mode", "dims",
      "detectors",  "psd",         "noise_record", "wideband",   "calibration_cache"};
  return keys;
}

void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

bool is_detector_experiment(Experiment e) {
  return e == Experiment::kPfaCurve || e == Experiment::kRoc || e == Experiment::kPdVsSnr;
}

double fraction_above(const std::vector<double>& values, double alpha) {
  const auto n = std::count_if(values.begin(), values.end(), [&](double v) { return v > alpha; });
  return static_cast<double>(n) / static_cast<double>(values.size());
}

/// Statistics of `trials` frames drawn from stream `tag`; occupied frames use
/// gains rescaled to `snr_linear`.
std::vector<double> frame_statistics(const ExperimentSpec& spec, DetectorKind kind, bool occupied,
                                     double snr_linear, std::uint64_t tag, std::size_t trials) {
  const auto config = calibration_config(spec, std::max<std::size_t>(trials, 100), tag);
  const ReceiverArray silent(std::vector<Complex>(spec.K, Complex{}), spec.sigma2);
  std::vector<double> stats(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    const std::uint64_t seed = derive_seed(spec.master_seed, tag, i);
    const auto frame =
        occupied ? generate_narrowband_frame(
                       ReceiverArray::with_snr(spec.K, spec.sigma2, snr_linear,
                                               splitmix64(seed ^ kGainSalt)),
                       spec.N, true, seed)
                 : generate_narrowband_frame(silent, spec.N, false, seed);
    stats[i] = detect::statistic(kind, frame, calibration::frame_noise_variance(config, seed));
  }
  return stats;
}

std::string cache_name(const ExperimentSpec& spec, DetectorKind kind) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s_K%zu_N%zu_%s_seed%llu_T%zu.csv", detect::to_string(kind).c_str(),
                spec.K, spec.N, calibration::to_string(spec.sigma2_mode).c_str(),
                static_cast<unsigned long long>(spec.master_seed), spec.calibration_trials);
  return buf;
}

CalibrationCurve h0_curve(const ExperimentSpec& spec, DetectorKind kind) {
  const auto config =
      calibration_config(spec, spec.calibration_trials, stream_tag(Stream::kCalibrationH0));
  if (!spec.calibration_cache) return calibration::simulate_h0(config, kind);

  const std::filesystem::path dir(*spec.calibration_cache);
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("calibration cache directory " + dir.string() + " does not exist");
  }
  const auto path = dir / cache_name(spec, kind);
  if (std::filesystem::exists(path)) {
    try {
      auto cached = calibration::load_curve(path);
      CalibrationCurve probe(std::vector<double>(100, 0.0), kind, config);
      if (calibration::curve_metadata(cached) == calibration::curve_metadata(probe)) return cached;
    } catch (const DomainError&) {
      // Stale or damaged cache entries are regenerated below.
    }
  }
  auto curve = calibration::simulate_h0(config, kind);
  calibration::save_curve(curve, path);
  return curve;
}

std::vector<double> snr_grid(double lo, double hi, double step) {
  std::vector<double> out;
  const auto count = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= count; ++i) out.push_back(lo + step * i);
  return out;
}

SpectrumScene trial_scene(const ExperimentSpec& spec, const std::optional<SpectrumScene>& file_scene,
                          std::mt19937_64& rng) {
  if (file_scene) return *file_scene;
  std::vector<bool> busy(spec.wideband.subbands, true);
  std::fill_n(busy.begin(), spec.wideband.free, false);
  std::shuffle(busy.begin(), busy.end(), rng);
  return SpectrumScene::equal_width(busy, spec.sigma2, db_to_linear(spec.snr_db.front()));
}

template <typename T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::kMpCheck:
      return "mp-check";
    case Experiment::kNoiseErrorEqual:
      return "noise-error-equal";
    case Experiment::kNoiseErrorAdaptive:
      return "noise-error-adaptive";
    case Experiment::kPfaCurve:
      return "pfa-curve";
    case Experiment::kRoc:
      return "roc";
    case Experiment::kPdVsSnr:
      return "pd-vs-snr";
  }
  return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
  for (const auto e : {Experiment::kMpCheck, Experiment::kNoiseErrorEqual,
                       Experiment::kNoiseErrorAdaptive, Experiment::kPfaCurve, Experiment::kRoc,
                       Experiment::kPdVsSnr}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (K < 1 || N < 1) throw ConfigError("K and N must be >= 1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ConfigError("sigma2 must be positive");
  for (const double s : snr_db) {
    if (!std::isfinite(s)) throw ConfigError("SNR values must be finite");
  }
  for (const double p : target_pfa) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("target_pfa values must lie in (0, 1)");
  }
  for (const auto& [k, n] : dims) {
    if (k < 1 || n < 1) throw ConfigError("dims entries must be positive");
  }
  if (is_detector_experiment(experiment)) {
    if (calibration_trials < 100) throw ConfigError("calibration_trials must be >= 100");
    if (detectors.empty()) throw ConfigError("no detectors selected");
    if (experiment != Experiment::kPfaCurve && target_pfa.empty()) {
      throw ConfigError("target_pfa list is empty");
    }
    if (experiment != Experiment::kPfaCurve && snr_db.empty()) throw ConfigError("snr_db is empty");
    try {
      calibration_config(*this, calibration_trials, 0).validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  if (experiment == Experiment::kNoiseErrorEqual || experiment == Experiment::kNoiseErrorAdaptive) {
    if (!scene && snr_db.empty()) throw ConfigError("snr_db is empty");
    if (wideband.subbands < 2 || wideband.free < 1 || wideband.free > wideband.subbands) {
      throw ConfigError("wideband needs >= 2 subbands and 1..subbands free");
    }
    if (wideband.n_total < 16) throw ConfigError("wideband.n_total too small");
  }
  if (experiment == Experiment::kNoiseErrorEqual) {
    if (subband_counts.empty()) throw ConfigError("subband_counts is empty");
    for (const auto k : subband_counts) {
      if (k < 2 || wideband.n_total % k != 0) {
        throw ConfigError("subband count " + std::to_string(k) + " must be >= 2 and divide n_total");
      }
    }
  }
  if (experiment == Experiment::kNoiseErrorAdaptive) {
    if (psd.segment_length < 16 || psd.segment_length > wideband.n_total) {
      throw ConfigError("psd.segment_length must lie in [16, n_total]");
    }
    if (!(psd.overlap >= 0.0 && psd.overlap < 1.0)) throw ConfigError("psd.overlap must lie in [0, 1)");
    if (psd.n_scales < 1) throw ConfigError("psd.n_scales must be >= 1");
  }
}

ExperimentSpec default_spec(Experiment e) {
  ExperimentSpec spec;
  spec.experiment = e;
  spec.output = to_string(e) + ".csv";
  switch (e) {
    case Experiment::kMpCheck:
      spec.K = 50;
      spec.N = 500;
      spec.trials = 100;
      break;
    case Experiment::kNoiseErrorEqual:
    case Experiment::kNoiseErrorAdaptive:
      spec.trials = 100;
      spec.snr_db = {-5.0};
      break;
    case Experiment::kPfaCurve:
      break;
    case Experiment::kRoc:
      spec.snr_db = {-10.0};
      spec.target_pfa = {0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
      break;
    case Experiment::kPdVsSnr:
      spec.snr_db = snr_grid(-20.0, 0.0, 2.0);
      spec.target_pfa = {0.1};
      break;
  }
  return spec;
}

ExperimentSpec parse_spec(const nlohmann::json& config, Experiment e) {
  reject_unknown(config, known_keys(), "experiment config");
  ExperimentSpec spec = default_spec(e);
  if (config.contains("experiment") && get_as<std::string>(config, "experiment") != to_string(e)) {
    throw ConfigError("config is for experiment '" + config["experiment"].get<std::string>() +
                      "', not '" + to_string(e) + "'");
  }
  if (config.contains("K")) spec.K = get_as<std::size_t>(config, "K");
  if (config.contains("N")) spec.N = get_as<std::size_t>(config, "N");
  if (config.contains("trials")) spec.trials = get_as<std::size_t>(config, "trials");
  if (config.contains("calibration_trials")) {
    spec.calibration_trials = get_as<std::size_t>(config, "calibration_trials");
  }
  if (config.contains("snr_db")) spec.snr_db = get_as<std::vector<double>>(config, "snr_db");
  if (config.contains("subband_counts")) {
    spec.subband_counts = get_as<std::vector<std::size_t>>(config, "subband_counts");
  }
  if (config.contains("target_pfa")) spec.target_pfa = get_as<std::vector<double>>(config, "target_pfa");
  if (config.contains("master_seed")) spec.master_seed = get_as<std::uint64_t>(config, "master_seed");
  if (config.contains("output")) spec.output = get_as<std::string>(config, "output");
  if (config.contains("scene")) spec.scene = get_as<std::string>(config, "scene");
  if (config.contains("prior")) {
    try {
      spec.prior = config.at("prior").get<noise::PriorSpec>();
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(std::string("bad prior: ") + ex.what());
    } catch (const DomainError& ex) {
      throw ConfigError(std::string("bad prior: ") + ex.what());
    }
  }
  if (config.contains("sigma2")) spec.sigma2 = get_as<double>(config, "sigma2");
  if (config.contains("sigma2_mode")) {
    try {
      spec.sigma2_mode = calibration::sigma2_mode_from_string(get_as<std::string>(config, "sigma2_mode"));
    } catch (const DomainError& ex) {
      throw ConfigError(ex.what());
    }
  }
  if (config.contains("dims")) {
    spec.dims = get_as<std::vector<std::pair<std::size_t, std::size_t>>>(config, "dims");
  }
  if (config.contains("detectors")) {
    spec.detectors.clear();
    for (const auto& name : get_as<std::vector<std::string>>(config, "detectors")) {
      try {
        spec.detectors.push_back(detect::detector_from_string(name));
      } catch (const DomainError& ex) {
        throw ConfigError(ex.what());
      }
    }
  }
  if (config.contains("psd")) {
    const auto& j = config.at("psd");
    reject_unknown(j, {"segment_length", "overlap", "n_scales"}, "psd");
    if (j.contains("segment_length")) spec.psd.segment_length = get_as<std::size_t>(j, "segment_length");
    if (j.contains("overlap")) spec.psd.overlap = get_as<double>(j, "overlap");
    if (j.contains("n_scales")) spec.psd.n_scales = get_as<std::size_t>(j, "n_scales");
  }
  if (config.contains("noise_record")) {
    const auto& j = config.at("noise_record");
    reject_unknown(j, {"subbands", "occupied", "snr_db", "record_length"}, "noise_record");
    auto& rec = spec.noise_record;
    if (j.contains("subbands")) rec.subbands = get_as<std::size_t>(j, "subbands");
    if (j.contains("occupied")) rec.occupied = get_as<std::size_t>(j, "occupied");
    if (j.contains("snr_db")) rec.snr_db = get_as<double>(j, "snr_db");
    if (j.contains("record_length")) rec.record_length = get_as<std::size_t>(j, "record_length");
  }
  if (config.contains("wideband")) {
    const auto& j = config.at("wideband");
    reject_unknown(j, {"subbands", "free", "n_total"}, "wideband");
    if (j.contains("subbands")) spec.wideband.subbands = get_as<std::size_t>(j, "subbands");
    if (j.contains("free")) spec.wideband.free = get_as<std::size_t>(j, "free");
    if (j.contains("n_total")) spec.wideband.n_total = get_as<std::size_t>(j, "n_total");
  }
  if (config.contains("calibration_cache")) {
    spec.calibration_cache = get_as<std::string>(config, "calibration_cache");
  }
  spec.validate();
  return spec;
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["experiment"] = to_string(spec.experiment);
  j["K"] = spec.K;
  j["N"] = spec.N;
  j["trials"] = spec.trials;
  j["calibration_trials"] = spec.calibration_trials;
  j["snr_db"] = spec.snr_db;
  j["subband_counts"] = spec.subband_counts;
  j["target_pfa"] = spec.target_pfa;
  j["master_seed"] = spec.master_seed;
  j["output"] = spec.output;
  if (spec.scene) j["scene"] = *spec.scene;
  if (spec.prior) j["prior"] = *spec.prior;
  j["sigma2"] = spec.sigma2;
  j["sigma2_mode"] = calibration::to_string(spec.sigma2_mode);
  j["dims"] = spec.dims;
  std::vector<std::string> names;
  for (const auto d : spec.detectors) names.push_back(detect::to_string(d));
  j["detectors"] = names;
  j["psd"] = {{"segment_length", spec.psd.segment_length},
              {"overlap", spec.psd.overlap},
              {"n_scales", spec.psd.n_scales}};
  j["noise_record"] = {{"subbands", spec.noise_record.subbands},
                       {"occupied", spec.noise_record.occupied},
                       {"snr_db", spec.noise_record.snr_db},
                       {"record_length", spec.noise_record.record_length}};
  j["wideband"] = {{"subbands", spec.wideband.subbands},
                   {"free", spec.wideband.free},
                   {"n_total", spec.wideband.n_total}};
  if (spec.calibration_cache) j["calibration_cache"] = *spec.calibration_cache;
  return j;
}

std::string config_hash(const ExperimentSpec& spec) {
  auto j = to_json(spec);
  j.erase("output");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

calibration::CalibrationConfig calibration_config(const ExperimentSpec& spec, std::size_t trials,
                                                  std::uint64_t stream) {
  CalibrationConfig config;
  config.trials = trials;
  config.target_pfa = spec.target_pfa.empty() ? 0.1 : spec.target_pfa.front();
  config.master_seed = spec.master_seed;
  config.k = spec.K;
  config.n = spec.N;
  config.sigma2 = spec.sigma2;
  config.sigma2_mode = spec.sigma2_mode;
  config.noise_record = spec.noise_record;
  config.stream = stream;
  return config;
}

ResultTable run_mp_check(const ExperimentSpec& spec) {
  ResultTable table({"K", "N", "trial", "ks", "in_support_frac"});
  auto dims = spec.dims;
  if (dims.empty()) dims.emplace_back(spec.K, spec.N);
  for (std::size_t g = 0; g < dims.size(); ++g) {
    const auto [k, n] = dims[g];
    const ReceiverArray silent(std::vector<Complex>(k, Complex{}), spec.sigma2);
    const rmt::MarchenkoPasturLaw law(spec.sigma2, static_cast<double>(k) / static_cast<double>(n));
    for (std::size_t t = 0; t < spec.trials; ++t) {
      const auto seed = derive_seed(spec.master_seed, Stream::kMpCheck, t, g);
      const auto frame = generate_narrowband_frame(silent, n, false, seed);
      const auto spectrum = detect::hermitian_eigenvalues(detect::sample_covariance(frame));
      const auto esd = rmt::build_esd(spectrum.values);
      const double inside =
          rmt::fraction_in_support(esd, law, kSupportMarginFraction * law.upper_edge());
      table.add_row({static_cast<std::int64_t>(k), static_cast<std::int64_t>(n),
                     static_cast<std::int64_t>(t), rmt::ks_distance(esd, law), inside});
    }
  }
  return table;
}

ResultTable run_noise_error(const ExperimentSpec& spec, NoiseErrorMode mode) {
  ResultTable table({"mode", "k", "trial", "sigma2_hat", "rel_error", "status"});
  std::optional<SpectrumScene> file_scene;
  if (spec.scene) {
    try {
      file_scene = load_scene(*spec.scene);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  const std::string mode_name = mode == NoiseErrorMode::kEqual ? "equal" : "adaptive";
  const std::vector<std::size_t> counts =
      mode == NoiseErrorMode::kEqual ? spec.subband_counts : std::vector<std::size_t>{0};
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // rows[count index][trial]
  std::vector<std::vector<std::vector<Cell>>> rows(counts.size());
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const auto seed = derive_seed(spec.master_seed, Stream::kNoiseError, t);
    std::mt19937_64 rng(seed);
    const auto scene = trial_scene(spec, file_scene, rng);
    const auto signal = generate_wideband_signal(scene, spec.wideband.n_total, splitmix64(seed ^ kSignalSalt));
    const double truth = scene.noise_sigma2;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      try {
        const auto est = mode == NoiseErrorMode::kEqual
                             ? noise::estimate_noise_known_count(signal, counts[c], spec.prior)
                             : noise::estimate_noise_scenario3(signal, spec.psd, spec.prior);
        rows[c].push_back({mode_name, static_cast<std::int64_t>(est.subband_count),
                           static_cast<std::int64_t>(t), est.sigma2_hat,
                           std::abs(est.sigma2_hat - truth) / truth, std::string("ok")});
      } catch (const DomainError&) {
        rows[c].push_back({mode_name, static_cast<std::int64_t>(counts[c]),
                           static_cast<std::int64_t>(t), nan, nan, std::string("failed")});
      } catch (const NumericalError&) {
        rows[c].push_back({mode_name, static_cast<std::int64_t>(counts[c]),
                           static_cast<std::int64_t>(t), nan, nan, std::string("failed")});
      }
    }
  }
  for (auto& per_count : rows) {
    for (auto& row : per_count) table.add_row(std::move(row));
  }
  return table;
}

ResultTable run_pfa_curve(const ExperimentSpec& spec) {
  ResultTable table({"detector", "alpha", "pfa"});
  for (const auto kind : spec.detectors) {
    const auto curve = h0_curve(spec, kind);
    const auto s = curve.sorted();
    const double lo = s.front();
    const double hi = s.back();
    for (std::size_t i = 0; i < kPfaCurvePoints; ++i) {
      const double alpha =
          lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kPfaCurvePoints - 1);
      table.add_row({detect::to_string(kind), alpha, calibration::pfa_at(curve, alpha)});
    }
  }
  return table;
}

ResultTable run_roc(const ExperimentSpec& spec) {
  ResultTable table({"detector", "target_pfa", "empirical_pfa", "pd", "trials"});
  const double snr = db_to_linear(spec.snr_db.front());
  for (const auto kind : spec.detectors) {
    const auto curve = h0_curve(spec, kind);
    const auto h0 = frame_statistics(spec, kind, false, 0.0, stream_tag(Stream::kEvaluationH0),
                                     spec.trials);
    const auto h1 = frame_statistics(spec, kind, true, snr, stream_tag(Stream::kEvaluationH1),
                                     spec.trials);
    for (const double p : spec.target_pfa) {
      const double alpha = calibration::threshold_for(curve, p).alpha;
      table.add_row({detect::to_string(kind), p, fraction_above(h0, alpha),
                     fraction_above(h1, alpha), static_cast<std::int64_t>(spec.trials)});
    }
  }
  return table;
}

ResultTable run_pd_vs_snr(const ExperimentSpec& spec) {
  ResultTable table({"detector", "snr_db", "pd", "empirical_pfa"});
  const double target = spec.target_pfa.front();
  for (const auto kind : spec.detectors) {
    const auto curve = h0_curve(spec, kind);
    const double alpha = calibration::threshold_for(curve, target).alpha;
    const auto h0 = frame_statistics(spec, kind, false, 0.0, stream_tag(Stream::kEvaluationH0),
                                     spec.trials);
    const double empirical_pfa = fraction_above(h0, alpha);
    for (std::size_t g = 0; g < spec.snr_db.size(); ++g) {
      // Same H1 seeds at every SNR point (common random numbers).
      const auto h1 = frame_statistics(spec, kind, true, db_to_linear(spec.snr_db[g]),
                                       stream_tag(Stream::kEvaluationH1), spec.trials);
      table.add_row({detect::to_string(kind), spec.snr_db[g], fraction_above(h1, alpha), empirical_pfa});
    }
  }
  return table;
}

ResultTable run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ResultTable table = [&] {
    switch (spec.experiment) {
      case Experiment::kMpCheck:
        return run_mp_check(spec);
      case Experiment::kNoiseErrorEqual:
        return run_noise_error(spec, NoiseErrorMode::kEqual);
      case Experiment::kNoiseErrorAdaptive:
        return run_noise_error(spec, NoiseErrorMode::kAdaptive);
      case Experiment::kPfaCurve:
        return run_pfa_curve(spec);
      case Experiment::kRoc:
        return run_roc(spec);
      case Experiment::kPdVsSnr:
        return run_pd_vs_snr(spec);
    }
    throw ConfigError("unknown experiment");
  }();
  table.experiment = to_string(spec.experiment);
  table.config_hash = config_hash(spec);
  table.seed = spec.master_seed;
  return table;
}

}  // namespace widesense::harness
