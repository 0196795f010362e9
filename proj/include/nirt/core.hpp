#ifndef NIRT_CORE_HPP
#define NIRT_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nirt {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Clip applied wherever log x or log(1-x) is taken on a probability ICC.
inline constexpr double kProbEpsilon = 1e-9;

//----------------------------------------------------------------------------
// Scalar primitives
//----------------------------------------------------------------------------

/// 1 / (1 + exp(-w)), branching on sign so exp never overflows.
inline double logistic(double w)
{
  if (w >= 0.0) {
    return 1.0 / (1.0 + std::exp(-w));
  }
  const double z = std::exp(w);
  return z / (1.0 + z);
}

/// log(1 + exp(z)) in the form max(z, 0) + log1p(exp(-|z|)).
inline double softplus(double z)
{
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline double logit(double p)
{
  return std::log(p) - std::log1p(-p);
}

/// Standard normal CDF as 0.5 * erfc(-z / sqrt(2)).
///
/// erfc is used instead of 1 + erf so the lower tail keeps full relative
/// precision; the absolute error is at the level of the libm erfc
/// (a few ulp), far below 1e-10.
inline double normal_cdf(double z)
{
  return 0.5 * std::erfc(-z * 0.70710678118654752440);
}

/// Inverse of normal_cdf on (0, 1).
///
/// Acklam's rational approximation (relative error 1.15e-9) followed by
/// one Halley step against normal_cdf, which brings the error to roughly
/// machine precision.
double inverse_normal_cdf(double p);

//----------------------------------------------------------------------------
// Row-major dense storage shared by the matrix-shaped domain types.
//----------------------------------------------------------------------------
template <typename T>
class Dense
{
public:
  Dense() = default;
  Dense(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill)
  {
  }
  Dense(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data))
  {
    if (data_.size() != rows_ * cols_) {
      throw Error("matrix data size does not match its dimensions");
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<T>& data() const { return data_; }

  bool operator==(const Dense&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

//----------------------------------------------------------------------------
// Domain types. All are validated on construction and immutable afterwards.
//----------------------------------------------------------------------------

/// Binary examinee x item responses, row = examinee.
class ResponseMatrix
{
public:
  ResponseMatrix(std::size_t n_examinees, std::size_t n_items, std::vector<std::uint8_t> values);

  std::size_t n_examinees() const { return values_.rows(); }
  std::size_t n_items() const { return values_.cols(); }

  std::uint8_t operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  std::span<const std::uint8_t> row(std::size_t i) const { return values_.row(i); }

  /// Number of correct answers of examinee i.
  std::size_t raw_score(std::size_t i) const;

  /// FNV-1a digest of dimensions and entries.
  std::uint64_t digest() const;

  bool operator==(const ResponseMatrix&) const = default;

private:
  Dense<std::uint8_t> values_;
};

/// Cut points and representative abilities of the ordered classes.
class ClassLadder
{
public:
  ClassLadder(std::vector<double> boundaries, std::vector<double> medians);

  /// The ten-class ladder with near-decile cut points of N(0, 1).
  static ClassLadder standard_ten();

  std::size_t n_classes() const { return medians_.size(); }
  const std::vector<double>& boundaries() const { return boundaries_; }
  const std::vector<double>& medians() const { return medians_; }

  bool operator==(const ClassLadder&) const = default;

private:
  std::vector<double> boundaries_;
  std::vector<double> medians_;
};

/// Per-item, per-class logits; rows nondecreasing.
class LogitIcc
{
public:
  LogitIcc(std::size_t n_items, std::size_t n_classes, std::vector<double> w);

  std::size_t n_items() const { return w_.rows(); }
  std::size_t n_classes() const { return w_.cols(); }
  double operator()(std::size_t j, std::size_t t) const { return w_(j, t); }
  std::span<const double> row(std::size_t j) const { return w_.row(j); }
  const std::vector<double>& data() const { return w_.data(); }

  bool operator==(const LogitIcc&) const = default;

private:
  Dense<double> w_;
};

/// Per-item, per-class correct-answer probabilities; rows nondecreasing.
class ProbIcc
{
public:
  ProbIcc(std::size_t n_items, std::size_t n_classes, std::vector<double> x);

  std::size_t n_items() const { return x_.rows(); }
  std::size_t n_classes() const { return x_.cols(); }
  double operator()(std::size_t j, std::size_t t) const { return x_(j, t); }
  std::span<const double> row(std::size_t j) const { return x_.row(j); }
  const std::vector<double>& data() const { return x_.data(); }

  bool operator==(const ProbIcc&) const = default;

private:
  Dense<double> x_;
};

/// Examinee x class membership weights, rows summing to one.
class SoftAssignment
{
public:
  SoftAssignment(std::size_t n_examinees, std::size_t n_classes, std::vector<double> y);

  /// One-hot rows from 0-based class indices.
  static SoftAssignment from_hard(std::span<const std::size_t> classes, std::size_t n_classes);

  std::size_t n_examinees() const { return y_.rows(); }
  std::size_t n_classes() const { return y_.cols(); }
  double operator()(std::size_t i, std::size_t t) const { return y_(i, t); }
  std::span<const double> row(std::size_t i) const { return y_.row(i); }
  const std::vector<double>& data() const { return y_.data(); }

  /// argmax per row, ties to the smallest class index.
  std::vector<std::size_t> hard_classes() const;

  bool operator==(const SoftAssignment&) const = default;

private:
  Dense<double> y_;
};

class ClassSizes
{
public:
  explicit ClassSizes(std::vector<double> pi);

  std::size_t n_classes() const { return pi_.size(); }
  double operator[](std::size_t t) const { return pi_[t]; }
  const std::vector<double>& values() const { return pi_; }

  bool operator==(const ClassSizes&) const = default;

private:
  std::vector<double> pi_;
};

/// l1 budget on second differences of a logit row; unbounded disables it.
class SmoothnessBudget
{
public:
  static SmoothnessBudget bounded(double gamma);
  static SmoothnessBudget unbounded() { return SmoothnessBudget(); }

  bool is_unbounded() const { return unbounded_; }
  double gamma() const { return gamma_; }

  bool operator==(const SmoothnessBudget&) const = default;

private:
  SmoothnessBudget() = default;
  double gamma_ = std::numeric_limits<double>::infinity();
  bool unbounded_ = true;
};

/// Elementwise logistic of a logit ICC.
ProbIcc icc_from_logits(const LogitIcc& w);

} // namespace nirt

#endif // NIRT_CORE_HPP
