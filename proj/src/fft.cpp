#include "widesense/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "widesense/errors.hpp"

namespace widesense::fft {

namespace {

// FFTW's planner is not thread-safe; only fftw_execute* is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

std::vector<std::complex<double>> transform(std::span<const std::complex<double>> x, int sign) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(n);
  if (n == 0) return out;
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(in.data()), as_fftw(out.data()), sign,
                            FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw NumericalError("FFTW failed to plan a transform");
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace

std::vector<std::complex<double>> forward_unitary(std::span<const std::complex<double>> x) {
  return transform(x, FFTW_FORWARD);
}

std::vector<std::complex<double>> inverse_unitary(std::span<const std::complex<double>> x) {
  return transform(x, FFTW_BACKWARD);
}

ForwardPlan::ForwardPlan(std::size_t n) : n_(n), plan_(nullptr) {
  if (n == 0) throw DomainError("zero-length transform");
  std::vector<std::complex<double>> in(n), out(n);
  std::lock_guard lock(planner_mutex());
  plan_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(in.data()), as_fftw(out.data()),
                           FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan_ == nullptr) throw NumericalError("FFTW failed to plan a transform");
}

ForwardPlan::~ForwardPlan() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

void ForwardPlan::execute(std::span<const std::complex<double>> in,
                          std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != n_) throw DomainError("transform buffer size mismatch");
  // fftw_execute_dft does not modify the input for out-of-place complex plans.
  fftw_execute_dft(static_cast<fftw_plan>(plan_),
                   as_fftw(const_cast<std::complex<double>*>(in.data())), as_fftw(out.data()));
}

}  // namespace widesense::fft
