#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "widesense/errors.hpp"
#include "widesense/noise_estimation.hpp"

namespace widesense::noise {

namespace {

constexpr double kThresholdStdMultiplier = 2.0;
constexpr double kKernelRadiusSigmas = 4.0;

/// Mirror an index into [0, n): -1 -> 0, n -> n - 1 (half-sample symmetric).
std::size_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < n ? i : period - 1 - i);
}

std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(kKernelRadiusSigmas * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
    kernel[static_cast<std::size_t>(t + radius)] = std::exp(-0.5 * (t * t) / (sigma * sigma));
  }
  const double total = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (auto& w : kernel) w /= total;

  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> out(x.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
      acc += kernel[static_cast<std::size_t>(t + radius)] * x[reflect(i + t, n)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

}  // namespace

SubbandPartition detect_boundaries(const PsdEstimate& psd, std::size_t n_scales) {
  const std::size_t n = psd.power.size();
  if (n < 16) throw DomainError("boundary detection needs at least 16 PSD bins");
  if (n_scales < 1) throw DomainError("boundary detection needs at least one scale");
  if (n_scales > 30) throw DomainError("too many scales");

  std::vector<double> log_psd(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double p = psd.power[j];
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw DegeneratePartitionError("PSD contains negative or non-finite values");
    }
    log_psd[j] = std::log(std::max(p, std::numeric_limits<double>::min()));
  }

  // edge[i] sits between bins i and i + 1.
  std::vector<double> edge(n - 1, 1.0);
  for (std::size_t scale = 1; scale <= n_scales; ++scale) {
    const auto smooth = gaussian_smooth(log_psd, std::ldexp(1.0, static_cast<int>(scale)));
    for (std::size_t i = 0; i + 1 < n; ++i) edge[i] *= std::abs(smooth[i + 1] - smooth[i]);
  }

  const double mean = std::accumulate(edge.begin(), edge.end(), 0.0) / static_cast<double>(edge.size());
  double var = 0.0;
  for (const double v : edge) var += (v - mean) * (v - mean);
  const double threshold =
      mean + kThresholdStdMultiplier * std::sqrt(var / static_cast<double>(edge.size()));

  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < edge.size(); ++i) {
    const bool rising = i == 0 || edge[i] > edge[i - 1];
    const bool falling = i + 1 == edge.size() || edge[i] >= edge[i + 1];
    if (rising && falling && edge[i] > threshold) peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](std::size_t a, std::size_t b) { return edge[a] > edge[b]; });

  // Boundary positions in bins: a peak at i is the boundary at bin i + 1.
  const double min_gap = 2.0 * std::ldexp(1.0, static_cast<int>(n_scales));
  std::vector<double> accepted{0.0, static_cast<double>(n)};
  for (const auto i : peaks) {
    const double pos = static_cast<double>(i + 1);
    const bool clear = std::all_of(accepted.begin(), accepted.end(),
                                   [&](double a) { return std::abs(a - pos) >= min_gap; });
    if (clear) accepted.push_back(pos);
  }
  std::sort(accepted.begin(), accepted.end());

  const double bin_width = psd.total_bandwidth / static_cast<double>(n);
  std::vector<double> boundaries;
  boundaries.reserve(accepted.size());
  for (const double pos : accepted) boundaries.push_back(pos * bin_width);
  boundaries.back() = psd.total_bandwidth;
  return SubbandPartition(std::move(boundaries), psd.total_bandwidth);
}

}  // namespace widesense::noise
