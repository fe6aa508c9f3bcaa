#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "setsim/components.hpp"
#include "setsim/descriptors.hpp"
#include "setsim/models.hpp"
#include "setsim/parallel.hpp"
#include "setsim/permtest.hpp"
#include "setsim/rng.hpp"

namespace setsim {

enum class ModelKind { Boolean, ReducedBoolean, Squares, Rectangles, Ellipses };

inline std::optional<ModelKind> parse_model(std::string_view name) {
  if (name == "boolean") return ModelKind::Boolean;
  if (name == "reduced-boolean") return ModelKind::ReducedBoolean;
  if (name == "squares") return ModelKind::Squares;
  if (name == "rectangles") return ModelKind::Rectangles;
  if (name == "ellipses") return ModelKind::Ellipses;
  return std::nullopt;
}

inline std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Boolean:
      return "boolean";
    case ModelKind::ReducedBoolean:
      return "reduced-boolean";
    case ModelKind::Squares:
      return "squares";
    case ModelKind::Rectangles:
      return "rectangles";
    case ModelKind::Ellipses:
      return "ellipses";
  }
  return "unknown";
}

inline bool needs_ratio_law(ModelKind kind) { return kind == ModelKind::Squares || kind == ModelKind::Rectangles; }

/// Parameters of every generator. Squares and rectangles also need a ratio
/// law and a count law, usually taken from Boolean reference realisations.
struct ModelSettings {
  Window window;
  BooleanParams boolean;
  double p_delete = 0.5;
  EllipseParams ellipse;
  int fixed_side = 4;
  std::optional<EmpiricalLaw> ratio_law;
  std::optional<CountLaw> count_law;
  std::size_t reference_realisations = 100;
};

struct AnalysisConfig {
  LabelingConfig labeling;
  DescriptorConfig descriptors;
  PermutationConfig permutation;
};

inline std::vector<ShapeDescriptor> describe_image(const BinaryImage& img, const LabelingConfig& labeling,
                                                   const DescriptorConfig& descriptors) {
  const auto comps = extract_components(img, labeling);
  return describe_components(img, comps, descriptors);
}

/// Perimeter/area ratios and per-realisation component counts pooled over
/// Boolean realisations.
struct ReferenceLaws {
  EmpiricalLaw ratios;
  EmpiricalLaw counts;
};

inline ReferenceLaws boolean_reference_laws(const ModelSettings& settings, const LabelingConfig& labeling,
                                            std::uint64_t seed, unsigned workers = 0) {
  const std::size_t n = settings.reference_realisations;
  if (n < 1) throw InvalidArgument("at least one reference realisation is needed");
  std::vector<std::vector<double>> ratios(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto img = simulate_boolean(settings.boolean, settings.window, derive_seed(seed, Stream::Reference, i));
    for (const auto& c : extract_components(img, labeling)) ratios[i].push_back(perimeter_area_ratio(c));
  });
  std::vector<double> pooled;
  std::vector<double> counts;
  for (const auto& r : ratios) {
    pooled.insert(pooled.end(), r.begin(), r.end());
    counts.push_back(static_cast<double>(r.size()));
  }
  if (pooled.empty()) throw InsufficientData("Boolean reference realisations contain no components");
  return {EmpiricalLaw(std::move(pooled)), EmpiricalLaw(std::move(counts))};
}

/// Fills a missing ratio law or count law from Boolean reference realisations.
inline void ensure_reference_laws(ModelSettings& settings, const LabelingConfig& labeling, std::uint64_t seed,
                                  unsigned workers = 0) {
  if (settings.ratio_law && settings.count_law) return;
  auto laws = boolean_reference_laws(settings, labeling, seed, workers);
  if (!settings.ratio_law) settings.ratio_law = std::move(laws.ratios);
  if (!settings.count_law) settings.count_law = CountLaw::from(std::move(laws.counts));
}

inline BinaryImage simulate_model(ModelKind kind, const ModelSettings& s, std::uint64_t seed) {
  if (needs_ratio_law(kind) && !s.ratio_law)
    throw InvalidArgument(std::string(model_name(kind)) + " model needs a ratio law");
  const CountLaw count = s.count_law ? *s.count_law : CountLaw::poisson(50.0);
  switch (kind) {
    case ModelKind::Boolean:
      return simulate_boolean(s.boolean, s.window, seed);
    case ModelKind::ReducedBoolean:
      return simulate_reduced_boolean(s.boolean, s.window, seed, s.p_delete);
    case ModelKind::Squares:
      return simulate_squares(*s.ratio_law, count, s.window, seed);
    case ModelKind::Rectangles:
      return simulate_rectangles(square_perimeter_law(*s.ratio_law), count, s.window, seed, s.fixed_side);
    case ModelKind::Ellipses:
      return simulate_ellipses(s.ellipse, s.window, seed);
  }
  throw InvalidArgument("unknown model");
}

/// One joint test per pair of fresh realisations (model a vs model b), each
/// side reduced to a k-sample of its components.
inline std::vector<TestOutcome> paired_experiment(ModelKind a, ModelKind b, const ModelSettings& settings,
                                                  std::size_t pairs, std::size_t k, const AnalysisConfig& cfg) {
  const std::uint64_t seed = cfg.permutation.seed;
  std::vector<TestOutcome> out(pairs);
  parallel_for(pairs, cfg.permutation.workers, [&](std::size_t i) {
    const auto img_a = simulate_model(a, settings, derive_seed(seed, Stream::Realisation, 2 * i));
    const auto img_b = simulate_model(b, settings, derive_seed(seed, Stream::Realisation, 2 * i + 1));
    const auto da = describe_image(img_a, cfg.labeling, cfg.descriptors);
    const auto db = describe_image(img_b, cfg.labeling, cfg.descriptors);
    if (da.size() < 2 || db.size() < 2)
      throw InsufficientData("pair " + std::to_string(i) + ": a realisation has fewer than 2 components");
    const auto sa = sample_without_replacement(std::span<const ShapeDescriptor>(da), k,
                                               derive_seed(seed, Stream::SampleX, i));
    const auto sb = sample_without_replacement(std::span<const ShapeDescriptor>(db), k,
                                               derive_seed(seed, Stream::SampleY, i));
    PermutationConfig sub = cfg.permutation;
    sub.seed = derive_seed(seed, Stream::Pair, i);
    out[i] = joint_similarity_test(sa, sb, sub);
  });
  return out;
}

/// Descriptors of all components of `realisations` realisations of `kind`;
/// `side` selects disjoint seed ranges so two pools of one model differ.
inline std::vector<ShapeDescriptor> descriptor_pool(ModelKind kind, const ModelSettings& settings,
                                                    std::size_t realisations, std::size_t side,
                                                    const AnalysisConfig& cfg) {
  std::vector<std::vector<ShapeDescriptor>> per(realisations);
  parallel_for(realisations, cfg.permutation.workers, [&](std::size_t i) {
    const auto img = simulate_model(kind, settings, derive_seed(cfg.permutation.seed, Stream::Realisation, 2 * i + side));
    per[i] = describe_image(img, cfg.labeling, cfg.descriptors);
  });
  std::vector<ShapeDescriptor> pool;
  for (auto& p : per) pool.insert(pool.end(), p.begin(), p.end());
  return pool;
}

/// Pools components of many realisations per model, then runs repeated
/// k-vs-k joint tests on draws from the two pools.
inline std::vector<TestOutcome> bootstrap_experiment(ModelKind a, ModelKind b, const ModelSettings& settings,
                                                     std::size_t realisations, std::size_t k, std::size_t repeats,
                                                     const AnalysisConfig& cfg) {
  const auto pool_a = descriptor_pool(a, settings, realisations, 0, cfg);
  const auto pool_b = descriptor_pool(b, settings, realisations, 1, cfg);
  PermutationConfig perm = cfg.permutation;
  perm.seed = derive_seed(cfg.permutation.seed, Stream::Bootstrap);
  return bootstrap_pooled_outcomes(pool_a, pool_b, k, repeats, perm);
}

}  // namespace setsim
