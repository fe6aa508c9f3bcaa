#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "setsim/error.hpp"
#include "setsim/parallel.hpp"

namespace setsim {

/// A testing function sampled at its n evaluation points.
using FunctionSample = std::vector<double>;

inline double euclid_kernel(double x, double y) noexcept { return std::abs(x - y); }

/// Number of square-root terms in the subset-depth kernel: sum over m = 1..depth of C(n, m).
inline std::uint64_t subset_term_count(std::size_t n, std::size_t depth) {
  std::uint64_t total = 0;
  std::uint64_t binom = 1;
  for (std::size_t m = 1; m <= depth && m <= n; ++m) {
    binom = binom * (n - m + 1) / m;
    total += binom;
  }
  return total;
}

/// Subset-depth kernel: for every index subset S of {0..n-1} with 1 <= |S| <= depth,
/// adds the Euclidean norm of (a - b) restricted to S.
inline double depth_kernel(std::span<const double> a, std::span<const double> b, int depth) {
  if (a.size() != b.size()) throw ShapeError("function samples differ in length");
  if (depth < 1 || static_cast<std::size_t>(depth) > a.size())
    throw InvalidArgument("kernel depth must lie in [1, n]");

  const std::size_t n = a.size();
  std::vector<double> sq(n);
  for (std::size_t k = 0; k < n; ++k) sq[k] = (a[k] - b[k]) * (a[k] - b[k]);

  double total = 0.0;
  // Subsets are visited in lexicographic order of their sorted index lists.
  auto visit = [&](auto& self, std::size_t start, int remaining, double partial) -> void {
    for (std::size_t k = start; k < n; ++k) {
      const double s = partial + sq[k];
      total += std::sqrt(s);
      if (remaining > 1) self(self, k + 1, remaining - 1, s);
    }
  };
  visit(visit, 0, depth, 0.0);
  return total;
}

namespace detail {

template <class T, class Kernel>
double ndist_direct(std::span<const T> xs, std::span<const T> ys, Kernel&& kernel) {
  if (xs.empty() || ys.empty()) throw InsufficientData("N-distance needs two nonempty samples");
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (const auto& x : xs)
    for (const auto& y : ys) sxy += kernel(x, y);
  for (const auto& a : xs)
    for (const auto& b : xs) sxx += kernel(a, b);
  for (const auto& a : ys)
    for (const auto& b : ys) syy += kernel(a, b);
  const auto m1 = static_cast<double>(xs.size());
  const auto m2 = static_cast<double>(ys.size());
  return 2.0 / (m1 * m2) * sxy - 1.0 / (m1 * m1) * sxx - 1.0 / (m2 * m2) * syy;
}

}  // namespace detail

/// Two-sample N-distance estimate of real samples under |x - y|.
inline double ndist_scalar(std::span<const double> xs, std::span<const double> ys) {
  return detail::ndist_direct(xs, ys, [](double a, double b) { return euclid_kernel(a, b); });
}

/// Two-sample N-distance estimate of function samples under the subset-depth kernel.
inline double ndist_function(std::span<const FunctionSample> ts, std::span<const FunctionSample> us, int depth) {
  return detail::ndist_direct(ts, us, [depth](const FunctionSample& a, const FunctionSample& b) {
    return depth_kernel(a, b, depth);
  });
}

/// Symmetric kernel values between all members of a pooled sample. Built once
/// per test so permutation rounds only re-index.
class KernelMatrix {
 public:
  KernelMatrix() = default;

  template <class T, class Kernel>
  static KernelMatrix build(std::span<const T> pooled, Kernel&& kernel, unsigned workers = 1) {
    KernelMatrix km;
    km.size_ = pooled.size();
    km.values_.assign(km.size_ * km.size_, 0.0);
    parallel_for(km.size_, workers, [&](std::size_t i) {
      for (std::size_t j = i; j < km.size_; ++j) km.values_[i * km.size_ + j] = kernel(pooled[i], pooled[j]);
    });
    for (std::size_t i = 0; i < km.size_; ++i)
      for (std::size_t j = 0; j < i; ++j) km.values_[i * km.size_ + j] = km.values_[j * km.size_ + i];
    return km;
  }

  std::size_t size() const noexcept { return size_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * size_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {values_.data() + i * size_, size_}; }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t size_ = 0;
  std::vector<double> values_;
};

/// N-distance between the two groups of a pooled sample. `group[i]` is 0 for
/// the first sample and 1 for the second. Sums run row-major over the matrix.
inline double ndist_grouped(const KernelMatrix& km, std::span<const std::uint8_t> group) {
  if (group.size() != km.size()) throw ShapeError("group labels do not match kernel matrix");
  double acc[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < km.size(); ++i) {
    const auto gi = group[i];
    ++count[gi];
    const auto row = km.row(i);
    double* a = acc[gi];
    for (std::size_t j = 0; j < row.size(); ++j) a[group[j]] += row[j];
  }
  if (count[0] == 0 || count[1] == 0) throw InsufficientData("N-distance needs two nonempty groups");
  const auto m1 = static_cast<double>(count[0]);
  const auto m2 = static_cast<double>(count[1]);
  return 2.0 / (m1 * m2) * acc[0][1] - 1.0 / (m1 * m1) * acc[0][0] - 1.0 / (m2 * m2) * acc[1][1];
}

}  // namespace setsim
