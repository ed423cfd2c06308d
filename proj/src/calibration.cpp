#include "widesense/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "widesense/errors.hpp"

namespace widesense::calibration {

namespace {

constexpr std::uint64_t kNoiseRecordSalt = 0x6e6f6973655f7265ULL;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Sigma2Mode mode) {
  return mode == Sigma2Mode::kOracle ? "oracle" : "estimated";
}

Sigma2Mode sigma2_mode_from_string(const std::string& name) {
  if (name == "oracle") return Sigma2Mode::kOracle;
  if (name == "estimated") return Sigma2Mode::kEstimated;
  throw DomainError("unknown sigma2_mode '" + name + "'");
}

void CalibrationConfig::validate() const {
  if (trials < 100) throw DomainError("calibration needs at least 100 trials");
  if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw DomainError("target_pfa must lie in (0, 1)");
  if (k == 0 || n == 0) throw DomainError("K and N must be positive");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("sigma2 must be positive");
  if (sigma2_mode == Sigma2Mode::kEstimated) {
    const auto& rec = noise_record;
    if (rec.subbands < 2 || rec.occupied >= rec.subbands) {
      throw DomainError("noise record needs >= 2 subbands and at least one free subband");
    }
    if (rec.record_length % rec.subbands != 0 || rec.record_length < 4 * rec.subbands) {
      throw DomainError("noise record length must be a multiple of the subband count");
    }
    if (!std::isfinite(rec.snr_db)) throw DomainError("noise record SNR must be finite");
  }
}

double frame_noise_variance(const CalibrationConfig& config, std::uint64_t seed) {
  if (config.sigma2_mode == Sigma2Mode::kOracle) return config.sigma2;
  const auto& rec = config.noise_record;
  std::mt19937_64 rng(splitmix64(seed ^ kNoiseRecordSalt));
  std::vector<bool> busy(rec.subbands, false);
  std::fill_n(busy.begin(), rec.occupied, true);
  std::shuffle(busy.begin(), busy.end(), rng);
  const auto scene = SpectrumScene::equal_width(busy, config.sigma2, db_to_linear(rec.snr_db));
  const auto record = generate_wideband_signal(scene, rec.record_length, rng());
  return noise::estimate_noise_known_count(record, rec.subbands).sigma2_hat;
}

CalibrationCurve::CalibrationCurve(std::vector<double> per_trial, detect::DetectorKind kind,
                                   CalibrationConfig config)
    : per_trial_(std::move(per_trial)), kind_(kind), config_(std::move(config)) {
  if (per_trial_.size() < 100) throw DomainError("calibration curve needs at least 100 samples");
  for (const double v : per_trial_) {
    if (!std::isfinite(v)) throw DomainError("calibration statistic is not finite");
  }
  sorted_ = per_trial_;
  std::sort(sorted_.begin(), sorted_.end());
}

CalibrationCurve simulate_h0(const CalibrationConfig& config, detect::DetectorKind kind) {
  config.validate();
  const ReceiverArray silent(std::vector<Complex>(config.k, Complex{}), config.sigma2);
  std::vector<double> stats(config.trials);
  for (std::size_t i = 0; i < config.trials; ++i) {
    const std::uint64_t seed = derive_seed(config.master_seed, config.stream, i);
    const auto frame = generate_narrowband_frame(silent, config.n, false, seed);
    const double sigma2_hat = frame_noise_variance(config, seed);
    stats[i] = detect::statistic(kind, frame, sigma2_hat);
  }
  return CalibrationCurve(std::move(stats), kind, config);
}

double pfa_at(const CalibrationCurve& curve, double alpha) {
  const auto s = curve.sorted();
  const auto above = s.end() - std::upper_bound(s.begin(), s.end(), alpha);
  return static_cast<double>(above) / static_cast<double>(s.size());
}

Threshold threshold_for(const CalibrationCurve& curve, double target_pfa) {
  if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw DomainError("target_pfa must lie in (0, 1)");
  const auto s = curve.sorted();
  const std::size_t n = s.size();
  if (s.front() == s.back()) return {s.front(), true};

  const double h = static_cast<double>(n - 1) * (1.0 - target_pfa);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double alpha = s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);

  const double slack = 1.0 / static_cast<double>(n);
  if (std::abs(pfa_at(curve, alpha) - target_pfa) <= slack) return {alpha, false};
  // Ties can push the interpolated value off target; fall back to the
  // closest order statistic that honours the bound.
  std::optional<double> best;
  for (const double candidate : s) {
    if (std::abs(pfa_at(curve, candidate) - target_pfa) <= slack &&
        (!best || std::abs(candidate - alpha) < std::abs(*best - alpha))) {
      best = candidate;
    }
  }
  return {best.value_or(alpha), false};
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

nlohmann::json curve_metadata(const CalibrationCurve& curve) {
  const auto& c = curve.config();
  return {{"detector", detect::to_string(curve.kind())},
          {"K", c.k},
          {"N", c.n},
          {"sigma2", c.sigma2},
          {"sigma2_mode", to_string(c.sigma2_mode)},
          {"master_seed", c.master_seed},
          {"stream", c.stream},
          {"trials", c.trials},
          {"target_pfa", c.target_pfa},
          {"noise_record",
           {{"subbands", c.noise_record.subbands},
            {"occupied", c.noise_record.occupied},
            {"snr_db", c.noise_record.snr_db},
            {"record_length", c.noise_record.record_length}}}};
}

void save_curve(const CalibrationCurve& curve, const std::filesystem::path& csv_path) {
  {
    std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot write calibration cache " + csv_path.string());
    out << "trial,statistic\n";
    const auto values = curve.per_trial();
    for (std::size_t i = 0; i < values.size(); ++i) {
      out << i << ',' << format_double(values[i]) << '\n';
    }
  }
  std::ofstream side(sidecar_path(csv_path), std::ios::binary | std::ios::trunc);
  if (!side) throw DomainError("cannot write calibration sidecar");
  side << curve_metadata(curve).dump(2) << '\n';
}

CalibrationCurve load_curve(const std::filesystem::path& csv_path) {
  std::ifstream side(sidecar_path(csv_path));
  if (!side) throw DomainError("missing calibration sidecar for " + csv_path.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(side);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed calibration sidecar: ") + e.what());
  }
  CalibrationConfig config;
  try {
    config.k = meta.at("K").get<std::size_t>();
    config.n = meta.at("N").get<std::size_t>();
    config.sigma2 = meta.at("sigma2").get<double>();
    config.sigma2_mode = sigma2_mode_from_string(meta.at("sigma2_mode").get<std::string>());
    config.master_seed = meta.at("master_seed").get<std::uint64_t>();
    config.stream = meta.at("stream").get<std::uint64_t>();
    config.trials = meta.at("trials").get<std::size_t>();
    config.target_pfa = meta.at("target_pfa").get<double>();
    const auto& rec = meta.at("noise_record");
    config.noise_record.subbands = rec.at("subbands").get<std::size_t>();
    config.noise_record.occupied = rec.at("occupied").get<std::size_t>();
    config.noise_record.snr_db = rec.at("snr_db").get<double>();
    config.noise_record.record_length = rec.at("record_length").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("incomplete calibration sidecar: ") + e.what());
  }
  const auto kind = detect::detector_from_string(meta.at("detector").get<std::string>());

  std::ifstream in(csv_path);
  if (!in) throw DomainError("cannot read calibration cache " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || line != "trial,statistic") {
    throw DomainError("calibration cache has an unexpected header");
  }
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError("malformed calibration row: " + line);
    const auto index = std::stoull(line.substr(0, comma));
    if (index != values.size()) throw DomainError("calibration rows out of trial order");
    values.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
  }
  if (values.size() != config.trials) throw DomainError("calibration cache row count mismatch");
  return CalibrationCurve(std::move(values), kind, std::move(config));
}

}  // namespace widesense::calibration
