#pragma once

#include <cstdint>

namespace widesense {

/// splitmix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent random streams used by the experiments. Calibration and
/// evaluation trials never share a stream.
enum class Stream : std::uint64_t {
  kCalibrationH0 = 1,
  kEvaluationH0 = 2,
  kEvaluationH1 = 3,
  kNoiseRecord = 4,
  kMpCheck = 5,
  kNoiseError = 6,
};

/// trial_seed = splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index).
/// `tag` is a Stream value, optionally combined with a grid-point index
/// via stream_tag().
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index);
}

constexpr std::uint64_t stream_tag(Stream s, std::uint64_t grid_point = 0) noexcept {
  return (static_cast<std::uint64_t>(s) << 32) | grid_point;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, Stream s, std::uint64_t index,
                                    std::uint64_t grid_point = 0) noexcept {
  return derive_seed(master, stream_tag(s, grid_point), index);
}

}  // namespace widesense
