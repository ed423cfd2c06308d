#pragma once

#include <complex>
#include <span>
#include <vector>

namespace widesense::fft {

/// Unitary DFT: X[k] = n^{-1/2} sum_t x[t] exp(-2 pi i k t / n). White noise
/// of variance s2 maps to bins with E|X[k]|^2 = s2.
std::vector<std::complex<double>> forward_unitary(std::span<const std::complex<double>> x);

/// Inverse of forward_unitary.
std::vector<std::complex<double>> inverse_unitary(std::span<const std::complex<double>> x);

/// Reusable unnormalized forward transform of a fixed length. Planning is
/// serialized internally; execution on distinct buffers is reentrant.
class ForwardPlan {
 public:
  explicit ForwardPlan(std::size_t n);
  ~ForwardPlan();
  ForwardPlan(const ForwardPlan&) = delete;
  ForwardPlan& operator=(const ForwardPlan&) = delete;

  std::size_t size() const noexcept { return n_; }
  /// in and out must both have size(); they may not alias.
  void execute(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const;

 private:
  std::size_t n_;
  void* plan_;
};

}  // namespace widesense::fft
