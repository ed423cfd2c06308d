#include "widesense/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "widesense/errors.hpp"

namespace widesense::rmt {

namespace {

constexpr double kQuadratureTolerance = 1e-10;
constexpr int kMaxQuadratureDepth = 48;

template <typename F>
double simpson_step(const F& f, double lo, double hi, double f_lo, double f_mid, double f_hi,
                    double whole, double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left_mid = 0.5 * (lo + mid);
  const double right_mid = 0.5 * (mid + hi);
  const double f_lm = f(left_mid);
  const double f_rm = f(right_mid);
  const double left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lm + f_mid);
  const double right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rm + f_hi);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, lo, mid, f_lo, f_lm, f_mid, left, 0.5 * tol, depth - 1) +
         simpson_step(f, mid, hi, f_mid, f_rm, f_hi, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double lo, double hi, double tol) {
  if (hi <= lo) return 0.0;
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  const double f_mid = f(0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
  return simpson_step(f, lo, hi, f_lo, f_mid, f_hi, whole, tol, kMaxQuadratureDepth);
}

void require_nonnegative(double t) {
  if (!(t >= 0.0)) throw DomainError("Marchenko-Pastur law evaluated at negative t");
}

}  // namespace

std::pair<double, double> mp_support(double sigma2, double ratio_s) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw DomainError("mp_support: sigma2 must be positive, got " + std::to_string(sigma2));
  }
  if (!(ratio_s > 0.0) || !std::isfinite(ratio_s)) {
    throw DomainError("mp_support: ratio must be positive, got " + std::to_string(ratio_s));
  }
  const double root = std::sqrt(ratio_s);
  return {sigma2 * (1.0 - root) * (1.0 - root), sigma2 * (1.0 + root) * (1.0 + root)};
}

MarchenkoPasturLaw::MarchenkoPasturLaw(double sigma2, double ratio_s)
    : sigma2_(sigma2), ratio_(ratio_s) {
  std::tie(a_, b_) = mp_support(sigma2, ratio_s);
}

double MarchenkoPasturLaw::density(double t) const {
  require_nonnegative(t);
  if (t <= a_ || t >= b_ || t == 0.0) return 0.0;
  return std::sqrt((t - a_) * (b_ - t)) / (2.0 * std::numbers::pi * ratio_ * sigma2_ * t);
}

double MarchenkoPasturLaw::atom_mass() const noexcept {
  return std::max(0.0, 1.0 - 1.0 / ratio_);
}

double MarchenkoPasturLaw::cdf(double t) const {
  require_nonnegative(t);
  const double atom = atom_mass();
  if (t <= a_) return atom;
  if (t >= b_) return 1.0;
  // t = a + (b - a) sin^2(theta) removes the square-root edge behaviour:
  // sqrt((t-a)(b-t)) dt = 2 (b-a)^2 sin^2 cos^2 dtheta.
  const double width = b_ - a_;
  const double scale = width * width / (std::numbers::pi * ratio_ * sigma2_);
  const auto integrand = [&](double theta) {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double s2 = s * s;
    const double tt = a_ + width * s2;
    if (tt <= 0.0) {
      // a == 0 and theta == 0: sin^2 / t -> 1 / width.
      return scale * c * c / width;
    }
    return scale * s2 * c * c / tt;
  };
  const double theta_t = std::asin(std::sqrt(std::clamp((t - a_) / width, 0.0, 1.0)));
  const double mass = adaptive_simpson(integrand, 0.0, theta_t, kQuadratureTolerance);
  return std::clamp(atom + mass, 0.0, 1.0);
}

double MarchenkoPasturLaw::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  if (p <= atom_mass()) return 0.0;
  double lo = a_;
  double hi = b_;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * b_; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) >= p) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double mp_density(const MarchenkoPasturLaw& law, double t) { return law.density(t); }
double mp_atom_mass(const MarchenkoPasturLaw& law) { return law.atom_mass(); }
double mp_cdf(const MarchenkoPasturLaw& law, double t) { return law.cdf(t); }

EmpiricalSpectralDistribution::EmpiricalSpectralDistribution(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw DomainError("empirical spectral distribution needs eigenvalues");
  values_.reserve(eigenvalues.size());
  for (const double v : eigenvalues) {
    if (!std::isfinite(v)) throw DomainError("non-finite eigenvalue");
    if (v < -kClampTolerance) {
      throw DomainError("eigenvalue " + std::to_string(v) + " is negative beyond round-off");
    }
    values_.push_back(std::max(v, 0.0));
  }
  std::sort(values_.begin(), values_.end());
}

double EmpiricalSpectralDistribution::cdf(double t) const noexcept {
  const auto count = std::upper_bound(values_.begin(), values_.end(), t) - values_.begin();
  return static_cast<double>(count) / static_cast<double>(values_.size());
}

EmpiricalSpectralDistribution build_esd(std::span<const double> eigenvalues) {
  return EmpiricalSpectralDistribution(eigenvalues);
}

double ks_distance(const EmpiricalSpectralDistribution& esd, const MarchenkoPasturLaw& law) {
  const auto values = esd.values();
  const double n = static_cast<double>(values.size());
  double worst = 0.0;
  std::size_t i = 0;
  while (i < values.size()) {
    const double x = values[i];
    std::size_t j = i;
    while (j < values.size() && values[j] == x) ++j;
    const double below = static_cast<double>(i) / n;
    const double at_or_below = static_cast<double>(j) / n;
    const double law_at = law.cdf(x);
    // The law is continuous except for the atom at zero.
    const double law_before = (x == 0.0) ? 0.0 : law_at;
    worst = std::max({worst, std::abs(at_or_below - law_at), std::abs(below - law_before)});
    i = j;
  }
  return worst;
}

double fraction_in_support(const EmpiricalSpectralDistribution& esd,
                           const MarchenkoPasturLaw& law, double margin) {
  const auto values = esd.values();
  const double lo = law.lower_edge() - margin;
  const double hi = law.upper_edge() + margin;
  const auto inside = std::count_if(values.begin(), values.end(),
                                    [&](double v) { return v >= lo && v <= hi; });
  return static_cast<double>(inside) / static_cast<double>(values.size());
}

}  // namespace widesense::rmt
