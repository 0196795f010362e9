#include "nirt/core.hpp"

#include <numeric>

namespace nirt {

namespace {

constexpr double kRowSumTolerance = 1e-9;

void require_monotone_rows(const Dense<double>& m, const char* what)
{
  for (std::size_t j = 0; j < m.rows(); ++j) {
    const auto row = m.row(j);
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (!std::isfinite(row[t])) {
        throw Error(std::string(what) + ": non-finite entry at item " + std::to_string(j + 1));
      }
      if (t + 1 < row.size() && row[t] > row[t + 1]) {
        throw Error(std::string(what) + ": row of item " + std::to_string(j + 1) +
                    " decreases between classes " + std::to_string(t + 1) + " and " +
                    std::to_string(t + 2));
      }
    }
  }
}

} // namespace

double inverse_normal_cdf(double p)
{
  if (!(p > 0.0 && p < 1.0)) {
    throw Error("inverse_normal_cdf: argument must lie in (0, 1)");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement.
  const double e = normal_cdf(x) - p;
  const double u = e * 2.50662827463100050242 * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

ResponseMatrix::ResponseMatrix(std::size_t n_examinees, std::size_t n_items,
                               std::vector<std::uint8_t> values)
    : values_(n_examinees, n_items, std::move(values))
{
  if (n_examinees == 0 || n_items == 0) {
    throw Error("response matrix needs at least one examinee and one item");
  }
  for (std::size_t i = 0; i < n_examinees; ++i) {
    for (std::size_t j = 0; j < n_items; ++j) {
      if (values_(i, j) > 1) {
        throw Error("response at examinee " + std::to_string(i + 1) + ", item " +
                    std::to_string(j + 1) + " is not 0 or 1");
      }
    }
  }
}

std::size_t ResponseMatrix::raw_score(std::size_t i) const
{
  const auto r = row(i);
  return std::accumulate(r.begin(), r.end(), std::size_t{0});
}

std::uint64_t ResponseMatrix::digest() const
{
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](std::uint64_t byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (std::uint64_t dim : {std::uint64_t(n_examinees()), std::uint64_t(n_items())}) {
    for (int k = 0; k < 8; ++k) {
      mix((dim >> (8 * k)) & 0xffU);
    }
  }
  for (auto v : values_.data()) {
    mix(v);
  }
  return h;
}

ClassLadder::ClassLadder(std::vector<double> boundaries, std::vector<double> medians)
    : boundaries_(std::move(boundaries)), medians_(std::move(medians))
{
  if (medians_.empty()) {
    throw Error("class ladder needs at least one class");
  }
  if (boundaries_.size() + 1 != medians_.size()) {
    throw Error("class ladder needs exactly one boundary fewer than medians");
  }
  for (std::size_t k = 0; k + 1 < boundaries_.size(); ++k) {
    if (!(boundaries_[k] < boundaries_[k + 1])) {
      throw Error("class ladder boundaries must be strictly increasing");
    }
  }
  for (std::size_t t = 0; t < medians_.size(); ++t) {
    if (t + 1 < medians_.size() && !(medians_[t] < medians_[t + 1])) {
      throw Error("class ladder medians must be strictly increasing");
    }
    const bool above_lower = t == 0 || medians_[t] >= boundaries_[t - 1];
    const bool below_upper = t + 1 == medians_.size() || medians_[t] < boundaries_[t];
    if (!above_lower || !below_upper) {
      throw Error("median of class " + std::to_string(t + 1) + " lies outside its range");
    }
  }
}

ClassLadder ClassLadder::standard_ten()
{
  return ClassLadder({-1.29, -0.81, -0.49, -0.23, 0.0, 0.23, 0.49, 0.81, 1.29},
                     {-1.73, -1.02, -0.64, -0.36, -0.12, 0.12, 0.36, 0.64, 1.02, 1.73});
}

LogitIcc::LogitIcc(std::size_t n_items, std::size_t n_classes, std::vector<double> w)
    : w_(n_items, n_classes, std::move(w))
{
  require_monotone_rows(w_, "logit ICC");
}

ProbIcc::ProbIcc(std::size_t n_items, std::size_t n_classes, std::vector<double> x)
    : x_(n_items, n_classes, std::move(x))
{
  require_monotone_rows(x_, "probability ICC");
  for (double v : x_.data()) {
    if (v < 0.0 || v > 1.0) {
      throw Error("probability ICC entry outside [0, 1]");
    }
  }
}

SoftAssignment::SoftAssignment(std::size_t n_examinees, std::size_t n_classes,
                               std::vector<double> y)
    : y_(n_examinees, n_classes, std::move(y))
{
  for (std::size_t i = 0; i < n_examinees; ++i) {
    double sum = 0.0;
    for (double v : y_.row(i)) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error("assignment weight of examinee " + std::to_string(i + 1) +
                    " outside [0, 1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw Error("assignment row of examinee " + std::to_string(i + 1) + " does not sum to 1");
    }
  }
}

SoftAssignment SoftAssignment::from_hard(std::span<const std::size_t> classes,
                                         std::size_t n_classes)
{
  std::vector<double> y(classes.size() * n_classes, 0.0);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] >= n_classes) {
      throw Error("class index out of range for examinee " + std::to_string(i + 1));
    }
    y[i * n_classes + classes[i]] = 1.0;
  }
  return SoftAssignment(classes.size(), n_classes, std::move(y));
}

std::vector<std::size_t> SoftAssignment::hard_classes() const
{
  std::vector<std::size_t> out(n_examinees());
  for (std::size_t i = 0; i < n_examinees(); ++i) {
    const auto r = row(i);
    // max_element returns the first maximum, which is the tie rule.
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

ClassSizes::ClassSizes(std::vector<double> pi) : pi_(std::move(pi))
{
  if (pi_.empty()) {
    throw Error("class sizes need at least one class");
  }
  double sum = 0.0;
  for (double v : pi_) {
    if (!(v > 0.0)) {
      throw Error("class sizes must be strictly positive");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw Error("class sizes must sum to 1");
  }
}

SmoothnessBudget SmoothnessBudget::bounded(double gamma)
{
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error("smoothness budget gamma must be a finite nonnegative number");
  }
  SmoothnessBudget b;
  b.gamma_ = gamma;
  b.unbounded_ = false;
  return b;
}

ProbIcc icc_from_logits(const LogitIcc& w)
{
  std::vector<double> x(w.data().size());
  std::transform(w.data().begin(), w.data().end(), x.begin(), logistic);
  return ProbIcc(w.n_items(), w.n_classes(), std::move(x));
}

} // namespace nirt
