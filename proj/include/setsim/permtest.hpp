#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "setsim/descriptors.hpp"
#include "setsim/error.hpp"
#include "setsim/ndist.hpp"
#include "setsim/parallel.hpp"
#include "setsim/rng.hpp"

namespace setsim {

struct PermutationConfig {
  std::size_t permutations = 999;
  std::uint64_t seed = 0;
  int depth = 2;
  /// Worker threads; 0 = hardware default. Results do not depend on it.
  unsigned workers = 0;
};

struct TestOutcome {
  double n_ratio_obs = 0.0;
  double n_curve_obs = 0.0;
  double p_ratio = 1.0;
  double p_curve = 1.0;
  double p_joint = 1.0;
  std::size_t s_used = 0;
  std::size_t exceed_ratio = 0;
  std::size_t exceed_curve = 0;
  std::size_t exceed_joint = 0;
};

/// (#{perm >= obs} + 1) / (s + 1). `tie_tolerance` widens ">=" by an absolute
/// margin so that ties broken only by rounding still count.
inline double permutation_pvalue(double observed, std::span<const double> permuted, double tie_tolerance = 0.0) {
  if (permuted.empty()) throw InsufficientData("permutation p-value needs at least one permuted statistic");
  std::size_t exceed = 0;
  for (double v : permuted) exceed += v >= observed - tie_tolerance ? 1 : 0;
  return static_cast<double>(exceed + 1) / static_cast<double>(permuted.size() + 1);
}

/// Uniformly random split of m1 + m2 pooled items: group[i] = 0 for the first
/// sample, 1 for the second. Built from the leading m1 slots of a random ordering.
inline std::vector<std::uint8_t> random_assignment(std::size_t m1, std::size_t m2, Engine& eng) {
  const std::size_t m = m1 + m2;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < m1; ++i) std::swap(order[i], order[i + uniform_index(eng, m - i)]);
  std::vector<std::uint8_t> group(m, 1);
  for (std::size_t i = 0; i < m1; ++i) group[order[i]] = 0;
  return group;
}

/// Absolute slack for ">=" comparisons of statistics computed from `km`;
/// generous against accumulated rounding, far below any real difference.
inline double tie_tolerance(const KernelMatrix& km) {
  return 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(km.size()) * km.max_abs();
}

struct PermutationDraws {
  std::vector<double> observed;               // one per matrix
  std::vector<std::vector<double>> permuted;  // [matrix][round]
};

/// Observed and permuted N-distances for several kernel matrices over the same
/// pooled items. Every round applies one relabeling to all matrices; round i
/// draws from its own stream so the result is independent of `workers`.
inline PermutationDraws permutation_draws(std::span<const KernelMatrix> matrices, std::size_t m1,
                                          std::size_t rounds, std::uint64_t seed, unsigned workers) {
  if (matrices.empty()) throw InvalidArgument("no kernel matrices");
  if (rounds < 1) throw InvalidArgument("number of permutations must be at least 1");
  const std::size_t m = matrices.front().size();
  for (const auto& km : matrices)
    if (km.size() != m) throw ShapeError("kernel matrices of different sizes");
  if (m1 < 1 || m1 >= m) throw InsufficientData("both samples must be nonempty");

  PermutationDraws out;
  std::vector<std::uint8_t> identity(m, 1);
  std::fill_n(identity.begin(), m1, std::uint8_t{0});
  for (const auto& km : matrices) out.observed.push_back(ndist_grouped(km, identity));

  out.permuted.assign(matrices.size(), std::vector<double>(rounds));
  parallel_for(rounds, workers, [&](std::size_t r) {
    Engine eng = make_engine(seed, Stream::Permutation, r);
    const auto group = random_assignment(m1, m - m1, eng);
    for (std::size_t k = 0; k < matrices.size(); ++k) out.permuted[k][r] = ndist_grouped(matrices[k], group);
  });
  return out;
}

/// Permutation p-value for equality in distribution of two real samples.
inline double scalar_permutation_test(std::span<const double> xs, std::span<const double> ys, std::size_t rounds,
                                      std::uint64_t seed, unsigned workers = 0) {
  if (xs.empty() || ys.empty()) throw InsufficientData("permutation test needs two nonempty samples");
  std::vector<double> pooled(xs.begin(), xs.end());
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  const std::vector<KernelMatrix> km{
      KernelMatrix::build(std::span<const double>(pooled), [](double a, double b) { return euclid_kernel(a, b); })};
  const auto draws = permutation_draws(km, xs.size(), rounds, seed, workers);
  return permutation_pvalue(draws.observed[0], draws.permuted[0], tie_tolerance(km[0]));
}

/// Joint test on perimeter/area ratios and curvature testing functions. The
/// joint p-value counts rounds in which both permuted statistics reach their
/// observed values.
inline TestOutcome joint_similarity_test(std::span<const ShapeDescriptor> dx, std::span<const ShapeDescriptor> dy,
                                         const PermutationConfig& cfg) {
  if (dx.size() < 2 || dy.size() < 2)
    throw InsufficientData("joint test needs at least 2 components per sample (got " + std::to_string(dx.size()) +
                           " and " + std::to_string(dy.size()) + ")");
  const int bins = dx.front().curve.bins;
  std::vector<double> ratios;
  std::vector<FunctionSample> curves;
  for (auto side : {dx, dy}) {
    for (const auto& d : side) {
      if (d.curve.bins != bins || d.curve.values.size() != static_cast<std::size_t>(bins))
        throw ShapeError("testing functions with different bin counts");
      ratios.push_back(d.ratio);
      curves.push_back(d.curve.values);
    }
  }
  if (cfg.depth < 1 || cfg.depth > bins) throw InvalidArgument("kernel depth must lie in [1, bins]");

  const int depth = cfg.depth;
  std::vector<KernelMatrix> km;
  km.push_back(KernelMatrix::build(std::span<const double>(ratios), [](double a, double b) { return euclid_kernel(a, b); },
                                   cfg.workers));
  km.push_back(KernelMatrix::build(std::span<const FunctionSample>(curves),
                                   [depth](const FunctionSample& a, const FunctionSample& b) {
                                     return depth_kernel(a, b, depth);
                                   },
                                   cfg.workers));

  const auto draws = permutation_draws(km, dx.size(), cfg.permutations, cfg.seed, cfg.workers);
  const double tol_ratio = tie_tolerance(km[0]);
  const double tol_curve = tie_tolerance(km[1]);

  TestOutcome out;
  out.n_ratio_obs = draws.observed[0];
  out.n_curve_obs = draws.observed[1];
  out.s_used = cfg.permutations;
  for (std::size_t r = 0; r < cfg.permutations; ++r) {
    const bool ratio_hit = draws.permuted[0][r] >= out.n_ratio_obs - tol_ratio;
    const bool curve_hit = draws.permuted[1][r] >= out.n_curve_obs - tol_curve;
    out.exceed_ratio += ratio_hit;
    out.exceed_curve += curve_hit;
    out.exceed_joint += ratio_hit && curve_hit;
  }
  const auto denom = static_cast<double>(cfg.permutations + 1);
  out.p_ratio = static_cast<double>(out.exceed_ratio + 1) / denom;
  out.p_curve = static_cast<double>(out.exceed_curve + 1) / denom;
  out.p_joint = static_cast<double>(out.exceed_joint + 1) / denom;
  return out;
}

/// Uniform sample of min(k, n) items without replacement, kept in input order.
template <class T>
std::vector<T> sample_without_replacement(std::span<const T> items, std::size_t k, std::uint64_t seed) {
  if (items.empty()) throw InsufficientData("cannot sample from an empty list");
  if (k < 1) throw InvalidArgument("sample size must be at least 1");
  if (k >= items.size()) return {items.begin(), items.end()};

  Engine eng = make_engine(seed);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + uniform_index(eng, items.size() - i)]);
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<T> out;
  out.reserve(k);
  for (auto i : order) out.push_back(items[i]);
  return out;
}

inline std::vector<Component> sample_components(std::span<const Component> comps, std::size_t k, std::uint64_t seed) {
  return sample_without_replacement(comps, k, seed);
}

/// Repeated k-vs-k joint tests on fresh draws (without replacement) from two
/// descriptor pools. Repeat r uses sub-seeds derived from (cfg.seed, r).
inline std::vector<TestOutcome> bootstrap_pooled_outcomes(std::span<const ShapeDescriptor> pool_x,
                                                          std::span<const ShapeDescriptor> pool_y, std::size_t k,
                                                          std::size_t repeats, const PermutationConfig& cfg) {
  if (k < 2) throw InvalidArgument("bootstrap sample size must be at least 2");
  if (repeats < 1) throw InvalidArgument("bootstrap needs at least one repeat");
  if (pool_x.size() < k)
    throw InsufficientData("first pool has " + std::to_string(pool_x.size()) + " descriptors, fewer than k = " +
                           std::to_string(k));
  if (pool_y.size() < k)
    throw InsufficientData("second pool has " + std::to_string(pool_y.size()) + " descriptors, fewer than k = " +
                           std::to_string(k));

  std::vector<TestOutcome> out(repeats);
  parallel_for(repeats, cfg.workers, [&](std::size_t r) {
    const auto sx = sample_without_replacement(pool_x, k, derive_seed(cfg.seed, Stream::SampleX, r));
    const auto sy = sample_without_replacement(pool_y, k, derive_seed(cfg.seed, Stream::SampleY, r));
    PermutationConfig sub = cfg;
    sub.seed = derive_seed(cfg.seed, Stream::Bootstrap, r);
    out[r] = joint_similarity_test(sx, sy, sub);
  });
  return out;
}

inline std::vector<double> bootstrap_pooled_test(std::span<const ShapeDescriptor> pool_x,
                                                 std::span<const ShapeDescriptor> pool_y, std::size_t k,
                                                 std::size_t repeats, const PermutationConfig& cfg) {
  std::vector<double> p;
  for (const auto& o : bootstrap_pooled_outcomes(pool_x, pool_y, k, repeats, cfg)) p.push_back(o.p_joint);
  return p;
}

struct PairwiseCell {
  std::size_t row = 0;
  std::size_t col = 0;
  double mean_p = 0.0;
  std::size_t count_below_05 = 0;
};

/// Upper triangle (diagonal included) of pairwise test results, row-major.
struct PairwiseMatrix {
  std::size_t size = 0;
  std::vector<PairwiseCell> cells;
  std::vector<std::string> warnings;

  const PairwiseCell& at(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    if (j >= size) throw InvalidArgument("matrix index out of range");
    // Rows 0..i-1 hold size, size-1, ..., size-i+1 cells.
    const std::size_t before = i * size - i * (i - 1) / 2;
    return cells[before + (j - i)];
  }
};

/// For every pair of images (i <= j) runs `repeats` joint tests on fresh
/// k-samples of each image's descriptors; a self pair uses two independent
/// samples from the same image. Images with fewer than k components are
/// tested with all of them and a warning is recorded.
inline PairwiseMatrix pairwise_matrix(std::span<const std::vector<ShapeDescriptor>> images, std::size_t k,
                                      std::size_t repeats, const PermutationConfig& cfg) {
  if (images.size() < 2) throw InsufficientData("pairwise matrix needs at least 2 images");
  if (repeats < 1) throw InvalidArgument("pairwise matrix needs at least one repeat");
  if (k < 2) throw InvalidArgument("sample size must be at least 2");

  PairwiseMatrix out;
  out.size = images.size();
  std::vector<std::size_t> k_eff(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].size() < 2)
      throw InsufficientData("image " + std::to_string(i) + " has " + std::to_string(images[i].size()) +
                             " components, at least 2 are needed");
    k_eff[i] = std::min(k, images[i].size());
    if (k_eff[i] < k)
      out.warnings.push_back("image " + std::to_string(i) + " has only " + std::to_string(images[i].size()) +
                             " components; sampling all of them instead of " + std::to_string(k));
  }

  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t j = i; j < images.size(); ++j) out.cells.push_back({i, j, 0.0, 0});

  const std::size_t total = out.cells.size() * repeats;
  std::vector<double> p(total);
  parallel_for(total, cfg.workers, [&](std::size_t t) {
    const std::size_t c = t / repeats;
    const std::size_t r = t % repeats;
    const auto& cell = out.cells[c];
    const std::uint64_t cell_seed = derive_seed(cfg.seed, Stream::Cell, c);
    const auto sx = sample_without_replacement(std::span<const ShapeDescriptor>(images[cell.row]), k_eff[cell.row],
                                               derive_seed(cell_seed, Stream::SampleX, r));
    const auto sy = sample_without_replacement(std::span<const ShapeDescriptor>(images[cell.col]), k_eff[cell.col],
                                               derive_seed(cell_seed, Stream::SampleY, r));
    PermutationConfig sub = cfg;
    sub.seed = derive_seed(cell_seed, Stream::Permutation, r);
    p[t] = joint_similarity_test(sx, sy, sub).p_joint;
  });

  for (std::size_t c = 0; c < out.cells.size(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      const double v = p[c * repeats + r];
      sum += v;
      out.cells[c].count_below_05 += v < 0.05 ? 1 : 0;
    }
    out.cells[c].mean_p = sum / static_cast<double>(repeats);
  }
  return out;
}

}  // namespace setsim
