#include "widesense/eigen_detector.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "widesense/errors.hpp"
#include "widesense/rmt.hpp"

namespace widesense::detect {

namespace {

constexpr double kResidualTolerance = 1e-8;

void require_positive_noise(double sigma2_hat) {
  if (!(sigma2_hat > 0.0) || !std::isfinite(sigma2_hat)) {
    throw DomainError("noise variance estimate must be positive");
  }
}

double off_diagonal_norm2(const Eigen::MatrixXcd& a) {
  double off = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) off += std::norm(a(i, j));
    }
  }
  return off;
}

}  // namespace

SampleCovariance::SampleCovariance(Eigen::MatrixXcd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
    throw DomainError("covariance must be a non-empty square matrix");
  }
  if (!matrix_.allFinite()) throw DomainError("covariance has non-finite entries");
  const Eigen::MatrixXcd sym = 0.5 * (matrix_ + matrix_.adjoint());
  matrix_ = sym;
}

SampleCovariance sample_covariance(const SampleMatrix& y) {
  const auto& e = y.entries();
  if (!e.allFinite()) throw DomainError("sample matrix has non-finite entries");
  return SampleCovariance(e * e.adjoint());
}

EigenSpectrum hermitian_eigenvalues(const SampleCovariance& r) {
  return hermitian_eigenvalues(r.matrix());
}

EigenSpectrum hermitian_eigenvalues(const Eigen::MatrixXcd& hermitian) {
  const Eigen::Index k = hermitian.rows();
  if (k == 0 || hermitian.cols() != k) throw DomainError("eigensolve needs a square matrix");
  if (k > 10000) throw DomainError("matrix too large for the Jacobi solver");
  if (!hermitian.allFinite()) throw DomainError("matrix has non-finite entries");

  Eigen::MatrixXcd a = 0.5 * (hermitian + hermitian.adjoint());
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(k, k);
  const double frob2 = a.squaredNorm();
  const double stop = frob2 * 1e-32;

  EigenSpectrum out;
  bool converged = off_diagonal_norm2(a) <= stop;
  while (!converged && out.sweeps < kMaxJacobiSweeps) {
    ++out.sweeps;
    for (Eigen::Index p = 0; p + 1 < k; ++p) {
      for (Eigen::Index q = p + 1; q < k; ++q) {
        const std::complex<double> apq = a(p, q);
        const double r = std::abs(apq);
        if (r == 0.0) continue;
        const std::complex<double> phase = apq / r;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Real Jacobi on [[app, r], [r, aqq]] after removing the phase.
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = t * c;
        // Columns: A <- A V with V = [[c, s], [-s e^{-i phi}, c e^{-i phi}]].
        const std::complex<double> conj_phase = std::conj(phase);
        for (Eigen::Index i = 0; i < k; ++i) {
          const auto aip = a(i, p);
          const auto aiq = a(i, q);
          a(i, p) = c * aip - s * conj_phase * aiq;
          a(i, q) = s * aip + c * conj_phase * aiq;
          const auto vip = v(i, p);
          const auto viq = v(i, q);
          v(i, p) = c * vip - s * conj_phase * viq;
          v(i, q) = s * vip + c * conj_phase * viq;
        }
        // Rows: A <- V^H A.
        for (Eigen::Index j = 0; j < k; ++j) {
          const auto apj = a(p, j);
          const auto aqj = a(q, j);
          a(p, j) = c * apj - s * phase * aqj;
          a(q, j) = s * apj + c * phase * aqj;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
    converged = off_diagonal_norm2(a) <= stop;
  }
  if (!converged) {
    throw NumericalError("Jacobi eigensolver did not converge in " +
                         std::to_string(kMaxJacobiSweeps) + " sweeps");
  }

  out.values.resize(static_cast<std::size_t>(k));
  double residual = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double lambda = a(j, j).real();
    out.values[static_cast<std::size_t>(j)] = lambda;
    const Eigen::VectorXcd vj = v.col(j);
    residual = std::max(residual, (hermitian * vj - lambda * vj).norm());
  }
  out.residual_bound = residual;
  std::sort(out.values.begin(), out.values.end(), std::greater<>());

  const double scale = std::max(std::abs(hermitian.trace().real()), std::sqrt(frob2));
  if (residual > kResidualTolerance * scale) {
    throw NumericalError("Jacobi eigensolver residual " + std::to_string(residual) +
                         " exceeds tolerance");
  }
  return out;
}

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kMpEdge:
      return "mp_edge";
    case DetectorKind::kEnergy:
      return "energy";
    case DetectorKind::kAgm:
      return "agm";
  }
  return "unknown";
}

DetectorKind detector_from_string(const std::string& name) {
  if (name == "mp_edge") return DetectorKind::kMpEdge;
  if (name == "energy") return DetectorKind::kEnergy;
  if (name == "agm") return DetectorKind::kAgm;
  throw DomainError("unknown detector '" + name + "'");
}

double mp_edge_statistic(const EigenSpectrum& spectrum, double sigma2_hat, std::size_t k,
                         std::size_t n) {
  require_positive_noise(sigma2_hat);
  if (k == 0 || n == 0) throw DomainError("K and N must be positive");
  if (spectrum.values.empty()) throw DomainError("empty spectrum");
  const double ratio = static_cast<double>(k) / static_cast<double>(n);
  const double edge = rmt::mp_support(sigma2_hat, ratio).second;
  return spectrum.values.front() / edge;
}

double energy_statistic(const SampleMatrix& y, double sigma2_hat) {
  require_positive_noise(sigma2_hat);
  return y.entries().squaredNorm() / (static_cast<double>(y.receivers()) * sigma2_hat);
}

double agm_statistic(const EigenSpectrum& spectrum) {
  if (spectrum.values.empty()) throw DomainError("empty spectrum");
  double sum = 0.0;
  double log_sum = 0.0;
  for (const double lambda : spectrum.values) {
    if (!(lambda > 0.0)) throw DomainError("AM/GM statistic needs positive eigenvalues");
    sum += lambda;
    log_sum += std::log(lambda);
  }
  const double count = static_cast<double>(spectrum.values.size());
  return std::exp(std::log(sum / count) - log_sum / count);
}

Hypothesis decide(double value, double threshold) noexcept {
  return value > threshold ? Hypothesis::kH1 : Hypothesis::kH0;
}

double statistic(DetectorKind kind, const SampleMatrix& y, double sigma2_hat) {
  switch (kind) {
    case DetectorKind::kEnergy:
      return energy_statistic(y, sigma2_hat);
    case DetectorKind::kMpEdge:
      return mp_edge_statistic(hermitian_eigenvalues(sample_covariance(y)), sigma2_hat,
                               y.receivers(), y.samples());
    case DetectorKind::kAgm:
      return agm_statistic(hermitian_eigenvalues(sample_covariance(y)));
  }
  throw DomainError("unknown detector");
}

DetectorStatistic evaluate(DetectorKind kind, const SampleMatrix& y, double sigma2_hat,
                           double threshold) {
  DetectorStatistic stat;
  stat.kind = kind;
  stat.value = statistic(kind, y, sigma2_hat);
  stat.threshold = threshold;
  stat.decision = decide(stat.value, threshold);
  return stat;
}

}  // namespace widesense::detect
