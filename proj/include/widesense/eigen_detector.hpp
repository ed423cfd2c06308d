#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

#include "widesense/wideband.hpp"

namespace widesense::detect {

/// R = Y Y^H of a 1/sqrt(N)-scaled sample matrix, symmetrized.
class SampleCovariance {
 public:
  explicit SampleCovariance(Eigen::MatrixXcd matrix);

  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  double trace() const noexcept { return matrix_.diagonal().real().sum(); }

 private:
  Eigen::MatrixXcd matrix_;
};

SampleCovariance sample_covariance(const SampleMatrix& y);

struct EigenSpectrum {
  std::vector<double> values;  ///< descending
  /// max_j ||R v_j - lambda_j v_j|| over the computed eigenpairs.
  double residual_bound = 0.0;
  int sweeps = 0;
};

/// Cyclic Jacobi with complex Givens rotations.
inline constexpr int kMaxJacobiSweeps = 100;

/// All eigenvalues of a Hermitian matrix, descending. Throws NumericalError
/// if the off-diagonal mass does not vanish within kMaxJacobiSweeps or the
/// residual exceeds 1e-8 * max(trace, ||R||).
EigenSpectrum hermitian_eigenvalues(const SampleCovariance& r);
EigenSpectrum hermitian_eigenvalues(const Eigen::MatrixXcd& hermitian);

enum class DetectorKind { kMpEdge, kEnergy, kAgm };

std::string to_string(DetectorKind kind);
DetectorKind detector_from_string(const std::string& name);

enum class Hypothesis { kH0, kH1 };

struct DetectorStatistic {
  double value = 0.0;
  DetectorKind kind = DetectorKind::kMpEdge;
  double threshold = 0.0;
  Hypothesis decision = Hypothesis::kH0;
};

/// lambda_max / b, with b = sigma2_hat (1 + sqrt(K/N))^2 the upper edge of
/// the Marchenko-Pastur support at the estimated noise level.
double mp_edge_statistic(const EigenSpectrum& spectrum, double sigma2_hat, std::size_t k,
                         std::size_t n);

/// trace(Y Y^H) / (K sigma2_hat).
double energy_statistic(const SampleMatrix& y, double sigma2_hat);

/// Arithmetic over geometric mean of the eigenvalues (>= 1).
double agm_statistic(const EigenSpectrum& spectrum);

/// H1 iff value > threshold.
Hypothesis decide(double value, double threshold) noexcept;

DetectorStatistic evaluate(DetectorKind kind, const SampleMatrix& y, double sigma2_hat,
                           double threshold);

/// Statistic of one frame for the given detector.
double statistic(DetectorKind kind, const SampleMatrix& y, double sigma2_hat);

}  // namespace widesense::detect
