#pragma once

#include <span>
#include <utility>
#include <vector>

namespace widesense::rmt {

/// Support edges of the Marchenko-Pastur law: a = s2(1-sqrt(s))^2,
/// b = s2(1+sqrt(s))^2. Throws DomainError unless sigma2 > 0 and ratio > 0.
std::pair<double, double> mp_support(double sigma2, double ratio_s);

/// Limiting eigenvalue law of (1/N) G G^H for a K x N white matrix with
/// entry variance sigma2 and K/N -> ratio_s.
class MarchenkoPasturLaw {
 public:
  MarchenkoPasturLaw(double sigma2, double ratio_s);

  double sigma2() const noexcept { return sigma2_; }
  double ratio() const noexcept { return ratio_; }
  double lower_edge() const noexcept { return a_; }
  double upper_edge() const noexcept { return b_; }

  /// Continuous part of the density. Zero outside (a, b); the point mass
  /// at zero is reported by atom_mass().
  double density(double t) const;
  /// max(0, 1 - 1/s).
  double atom_mass() const noexcept;
  /// Atom plus the continuous density integrated over [a, min(t, b)].
  double cdf(double t) const;
  /// Smallest t with cdf(t) >= p, by bisection on cdf. p in [0, 1].
  double quantile(double p) const;

 private:
  double sigma2_;
  double ratio_;
  double a_;
  double b_;
};

double mp_density(const MarchenkoPasturLaw& law, double t);
double mp_atom_mass(const MarchenkoPasturLaw& law);
double mp_cdf(const MarchenkoPasturLaw& law, double t);

/// Sorted, clamped eigenvalue set. Values in [-1e-9, 0) are clamped to 0.
class EmpiricalSpectralDistribution {
 public:
  static constexpr double kClampTolerance = 1e-9;

  explicit EmpiricalSpectralDistribution(std::span<const double> eigenvalues);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  /// Fraction of eigenvalues <= t.
  double cdf(double t) const noexcept;

 private:
  std::vector<double> values_;
};

EmpiricalSpectralDistribution build_esd(std::span<const double> eigenvalues);

/// Kolmogorov-Smirnov distance between the ESD and the law, checked on both
/// sides of every jump of the empirical CDF.
double ks_distance(const EmpiricalSpectralDistribution& esd, const MarchenkoPasturLaw& law);

/// Fraction of ESD values inside [a - margin, b + margin].
double fraction_in_support(const EmpiricalSpectralDistribution& esd,
                           const MarchenkoPasturLaw& law, double margin = 0.0);

}  // namespace widesense::rmt
