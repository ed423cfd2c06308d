#include "widesense/wideband.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "widesense/errors.hpp"
#include "widesense/fft.hpp"

namespace widesense {

namespace {

constexpr double kEdgeTolerance = 1e-9;

/// CN(0, variance): independent real and imaginary parts of variance / 2.
class ComplexGaussian {
 public:
  explicit ComplexGaussian(double variance) : normal_(0.0, std::sqrt(0.5 * variance)) {}

  template <typename Rng>
  Complex operator()(Rng& rng) {
    const double re = normal_(rng);
    const double im = normal_(rng);
    return {re, im};
  }

 private:
  std::normal_distribution<double> normal_;
};

void require_finite_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive");
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ReceiverArray::ReceiverArray(std::vector<Complex> gains, double sigma2)
    : gains_(std::move(gains)), sigma2_(sigma2) {
  if (gains_.empty()) throw DomainError("receiver array needs at least one receiver");
  require_finite_positive(sigma2_, "receiver noise variance");
  for (const auto& h : gains_) {
    if (!std::isfinite(h.real()) || !std::isfinite(h.imag())) {
      throw DomainError("non-finite channel gain");
    }
  }
}

ReceiverArray ReceiverArray::with_snr(std::size_t k_receivers, double sigma2, double snr_linear,
                                      std::uint64_t seed) {
  if (k_receivers == 0) throw DomainError("receiver array needs at least one receiver");
  if (!(snr_linear >= 0.0) || !std::isfinite(snr_linear)) throw DomainError("SNR must be >= 0");
  std::mt19937_64 rng(seed);
  ComplexGaussian draw(1.0);
  std::vector<Complex> gains(k_receivers);
  double energy = 0.0;
  for (auto& h : gains) {
    h = draw(rng);
    energy += std::norm(h);
  }
  const double target = snr_linear * sigma2 * static_cast<double>(k_receivers);
  const double scale = energy > 0.0 ? std::sqrt(target / energy) : 0.0;
  for (auto& h : gains) h *= scale;
  return ReceiverArray(std::move(gains), sigma2);
}

double ReceiverArray::gain_energy() const noexcept {
  double e = 0.0;
  for (const auto& h : gains_) e += std::norm(h);
  return e;
}

double ReceiverArray::snr() const noexcept {
  return gain_energy() / static_cast<double>(gains_.size()) / sigma2_;
}

SampleMatrix::SampleMatrix(Eigen::MatrixXcd entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.cols() < 1) throw DomainError("empty sample matrix");
  if (!entries_.allFinite()) throw DomainError("sample matrix has non-finite entries");
}

SampleMatrix generate_narrowband_frame(const ReceiverArray& array, std::size_t n_samples,
                                       bool occupied, std::uint64_t seed) {
  if (n_samples == 0) throw DomainError("frame needs at least one sample");
  const auto k = static_cast<Eigen::Index>(array.size());
  const auto n = static_cast<Eigen::Index>(n_samples);
  std::mt19937_64 rng(seed);
  ComplexGaussian noise(array.sigma2());
  ComplexGaussian symbol(1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_samples));
  const auto gains = array.gains();

  Eigen::MatrixXcd y(k, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    const Complex s = occupied ? symbol(rng) : Complex{};
    for (Eigen::Index row = 0; row < k; ++row) {
      y(row, col) = scale * (gains[static_cast<std::size_t>(row)] * s + noise(rng));
    }
  }
  return SampleMatrix(std::move(y));
}

void SpectrumScene::validate() const {
  if (!(total_bandwidth > 0.0 && total_bandwidth <= 1.0)) {
    throw DomainError("total_bandwidth must lie in (0, 1]");
  }
  require_finite_positive(noise_sigma2, "noise_sigma2");
  if (subbands.empty()) throw DomainError("scene has no subbands");
  double edge = 0.0;
  bool any_free = false;
  for (std::size_t i = 0; i < subbands.size(); ++i) {
    const auto& sb = subbands[i];
    if (std::abs(sb.start - edge) > kEdgeTolerance) {
      throw DomainError("subband " + std::to_string(i) + " does not start where the previous ends");
    }
    if (!(sb.end - sb.start > kEdgeTolerance)) {
      throw DomainError("subband " + std::to_string(i) + " has zero width");
    }
    if (sb.occupied) {
      require_finite_positive(sb.power, "occupied subband power");
    } else {
      if (sb.power != 0.0) throw DomainError("unoccupied subband must have zero power");
      any_free = true;
    }
    edge = sb.end;
  }
  if (std::abs(edge - total_bandwidth) > kEdgeTolerance) {
    throw DomainError("subbands do not tile [0, total_bandwidth]");
  }
  if (!any_free) throw DomainError("scene needs at least one unoccupied subband");
}

SpectrumScene SpectrumScene::equal_width(const std::vector<bool>& occupied, double noise_sigma2,
                                         double snr_linear) {
  SpectrumScene scene;
  scene.total_bandwidth = 1.0;
  scene.noise_sigma2 = noise_sigma2;
  const double width = 1.0 / static_cast<double>(occupied.size());
  for (std::size_t i = 0; i < occupied.size(); ++i) {
    Subband sb;
    sb.start = static_cast<double>(i) * width;
    sb.end = (i + 1 == occupied.size()) ? 1.0 : static_cast<double>(i + 1) * width;
    sb.occupied = occupied[i];
    sb.power = occupied[i] ? noise_sigma2 * snr_linear : 0.0;
    scene.subbands.push_back(sb);
  }
  scene.validate();
  return scene;
}

void to_json(nlohmann::json& j, const Subband& s) {
  j = {{"start", s.start}, {"end", s.end}, {"occupied", s.occupied}, {"power", s.power}};
}

void from_json(const nlohmann::json& j, Subband& s) {
  for (const auto& [key, _] : j.items()) {
    if (key != "start" && key != "end" && key != "occupied" && key != "power") {
      throw DomainError("unknown subband key '" + key + "'");
    }
  }
  s.start = j.at("start").get<double>();
  s.end = j.at("end").get<double>();
  s.occupied = j.at("occupied").get<bool>();
  s.power = j.value("power", 0.0);
}

void to_json(nlohmann::json& j, const SpectrumScene& s) {
  j = {{"total_bandwidth", s.total_bandwidth},
       {"subbands", s.subbands},
       {"noise_sigma2", s.noise_sigma2}};
}

void from_json(const nlohmann::json& j, SpectrumScene& s) {
  for (const auto& [key, _] : j.items()) {
    if (key != "total_bandwidth" && key != "subbands" && key != "noise_sigma2") {
      throw DomainError("unknown scene key '" + key + "'");
    }
  }
  s.total_bandwidth = j.at("total_bandwidth").get<double>();
  s.subbands = j.at("subbands").get<std::vector<Subband>>();
  s.noise_sigma2 = j.at("noise_sigma2").get<double>();
  s.validate();
}

SpectrumScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open scene file " + path.string());
  try {
    return nlohmann::json::parse(in).get<SpectrumScene>();
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("malformed scene file " + path.string() + ": " + e.what());
  }
}

std::pair<std::size_t, std::size_t> frequency_bins(double start, double end, std::size_t n) {
  const double nn = static_cast<double>(n);
  const auto lo = static_cast<std::size_t>(std::max(0.0, std::ceil(start * nn - kEdgeTolerance)));
  const auto hi = static_cast<std::size_t>(std::max(0.0, std::ceil(end * nn - kEdgeTolerance)));
  return {std::min(lo, n), std::min(hi, n)};
}

ComplexSeries generate_wideband_signal(const SpectrumScene& scene, std::size_t n_total,
                                       std::uint64_t seed) {
  scene.validate();
  if (n_total < 4 * scene.subbands.size()) {
    throw DomainError("need at least 4 samples per subband");
  }
  std::mt19937_64 rng(seed);

  ComplexSeries spectrum(n_total);
  bool any_primary = false;
  for (const auto& sb : scene.subbands) {
    if (!sb.occupied) continue;
    const auto [lo, hi] = frequency_bins(sb.start, sb.end, n_total);
    if (lo >= hi) throw DomainError("occupied subband narrower than one frequency bin");
    ComplexGaussian draw(sb.power);
    for (std::size_t j = lo; j < hi; ++j) spectrum[j] = draw(rng);
    any_primary = true;
  }

  ComplexSeries signal = any_primary ? fft::inverse_unitary(spectrum) : ComplexSeries(n_total);
  ComplexGaussian noise(scene.noise_sigma2);
  for (auto& v : signal) v += noise(rng);
  return signal;
}

PsdEstimate estimate_psd(std::span<const Complex> signal, std::size_t segment_length,
                         double overlap) {
  if (segment_length == 0) throw DomainError("segment length must be positive");
  if (segment_length > signal.size()) throw DomainError("segment longer than the signal");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw DomainError("overlap must lie in [0, 1)");

  const std::size_t len = segment_length;
  const auto overlap_samples = static_cast<std::size_t>(std::lround(overlap * static_cast<double>(len)));
  const std::size_t hop = std::max<std::size_t>(1, len - std::min(overlap_samples, len - 1));
  const std::size_t segments = 1 + (signal.size() - len) / hop;

  std::vector<double> window(len);
  double window_energy = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    window[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(len));
    window_energy += window[t] * window[t];
  }
  if (len == 1) {
    window[0] = 1.0;
    window_energy = 1.0;
  }

  fft::ForwardPlan plan(len);
  ComplexSeries frame(len), bins(len);
  PsdEstimate psd;
  psd.segment_length = len;
  psd.overlap = overlap;
  psd.power.assign(len, 0.0);
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t offset = s * hop;
    for (std::size_t t = 0; t < len; ++t) frame[t] = window[t] * signal[offset + t];
    plan.execute(frame, bins);
    for (std::size_t j = 0; j < len; ++j) psd.power[j] += std::norm(bins[j]);
  }
  const double norm = 1.0 / (static_cast<double>(segments) * window_energy);
  psd.freqs.resize(len);
  for (std::size_t j = 0; j < len; ++j) {
    psd.power[j] *= norm;
    psd.freqs[j] = static_cast<double>(j) / static_cast<double>(len);
  }
  return psd;
}

}  // namespace widesense
