#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "setsim/components.hpp"
#include "setsim/descriptors.hpp"
#include "setsim/error.hpp"
#include "setsim/image.hpp"
#include "setsim/rng.hpp"

namespace setsim {

/// Observation window in pixels. Pixel (x, y) is the unit cell centred at (x, y).
struct Window {
  int width = 400;
  int height = 400;
};

inline void validate(const Window& w) {
  if (w.width < 1 || w.height < 1) throw InvalidArgument("window must be at least 1x1");
}

/// Uniform law on [min, max]; min == max is a constant.
struct RadiusLaw {
  double min = 1.0;
  double max = 1.0;

  static RadiusLaw constant(double r) { return {r, r}; }
  static RadiusLaw uniform(double lo, double hi) { return {lo, hi}; }

  double sample(Engine& eng) const { return min == max ? min : setsim::uniform(eng, min, max); }
};

inline void validate(const RadiusLaw& law, const char* what) {
  if (!(law.min >= 1.0) || !(law.max >= law.min))
    throw InvalidArgument(std::string(what) + ": need 1 <= min <= max");
}

struct BooleanParams {
  /// Germs per square pixel.
  double intensity = 90.0 / (432.0 * 432.0);
  RadiusLaw radius = RadiusLaw::uniform(4.0, 16.0);
};

struct Disc {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
};

/// Sets every pixel whose centre lies within distance r of (cx, cy).
inline void rasterize_disc(BinaryImage& img, double cx, double cy, double r) {
  const int x0 = std::max(0, static_cast<int>(std::ceil(cx - r)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::floor(cx + r)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(cy - r)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::floor(cy + r)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      if (dx * dx + dy * dy <= r * r) img.set(x, y);
    }
  }
}

/// Sets every pixel whose centre lies in the ellipse with semi-axes a (along
/// angle theta) and b, centred at (cx, cy).
inline void rasterize_ellipse(BinaryImage& img, double cx, double cy, double a, double b, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double reach = std::max(a, b);
  const int x0 = std::max(0, static_cast<int>(std::ceil(cx - reach)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::floor(cx + reach)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(cy - reach)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::floor(cy + reach)));
  // (u/a)^2 + (v/b)^2 <= 1, multiplied through so axis-aligned integer cases stay exact.
  const double limit = a * a * b * b;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double u = dx * c + dy * s;
      const double v = -dx * s + dy * c;
      if (u * u * b * b + v * v * a * a <= limit) img.set(x, y);
    }
  }
}

/// Germs of a Boolean model: Poisson count over the window dilated by the
/// largest radius, uniform positions, independent radii.
inline std::vector<Disc> sample_boolean_germs(const BooleanParams& p, const Window& w, std::uint64_t seed) {
  validate(w);
  validate(p.radius, "Boolean radius law");
  if (!(p.intensity > 0.0)) throw InvalidArgument("Boolean intensity must be positive");
  const double margin = p.radius.max;
  const double x_lo = -0.5 - margin;
  const double x_hi = w.width - 0.5 + margin;
  const double y_lo = -0.5 - margin;
  const double y_hi = w.height - 0.5 + margin;
  Engine eng = make_engine(seed, Stream::Germs);
  const auto n = poisson(eng, p.intensity * (x_hi - x_lo) * (y_hi - y_lo));
  std::vector<Disc> germs;
  germs.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Disc d;
    d.x = uniform(eng, x_lo, x_hi);
    d.y = uniform(eng, y_lo, y_hi);
    d.r = p.radius.sample(eng);
    germs.push_back(d);
  }
  return germs;
}

inline BinaryImage simulate_boolean(const BooleanParams& p, const Window& w, std::uint64_t seed) {
  BinaryImage img(w.width, w.height);
  for (const auto& d : sample_boolean_germs(p, w, seed)) rasterize_disc(img, d.x, d.y, d.r);
  return img;
}

/// Boolean realisation with each connected component deleted independently
/// with probability `p_delete`.
inline BinaryImage simulate_reduced_boolean(const BooleanParams& p, const Window& w, std::uint64_t seed,
                                            double p_delete = 0.5, Connectivity connectivity = Connectivity::Eight) {
  if (!(p_delete >= 0.0 && p_delete <= 1.0)) throw InvalidArgument("deletion probability must lie in [0, 1]");
  const BinaryImage full = simulate_boolean(p, w, seed);
  Engine eng = make_engine(seed, Stream::Deletion);
  BinaryImage out(w.width, w.height);
  for (const auto& comp : label_components(full, connectivity)) {
    if (bernoulli(eng, p_delete)) continue;
    for (const auto& px : comp.pixels) out.set(px.x, px.y);
  }
  return out;
}

/// Observed values drawn back uniformly.
class EmpiricalLaw {
 public:
  explicit EmpiricalLaw(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InsufficientData("empirical law needs at least one value");
    std::sort(values_.begin(), values_.end());
  }

  double sample(Engine& eng) const { return values_[uniform_index(eng, values_.size())]; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
};

/// Pooled perimeter/area ratios of all components in `realisations`.
inline EmpiricalLaw empirical_ratio_distribution(std::span<const BinaryImage> realisations,
                                                 const LabelingConfig& labeling = {}) {
  std::vector<double> ratios;
  for (const auto& img : realisations)
    for (const auto& c : extract_components(img, labeling)) ratios.push_back(perimeter_area_ratio(c));
  if (ratios.empty()) throw InsufficientData("no components in the reference realisations");
  return EmpiricalLaw(std::move(ratios));
}

/// Number of objects per realisation.
struct CountLaw {
  enum class Kind { Fixed, Poisson, Empirical };
  Kind kind = Kind::Poisson;
  double mean = 50.0;
  std::optional<EmpiricalLaw> empirical;

  static CountLaw fixed(std::uint64_t n) { return {Kind::Fixed, static_cast<double>(n), std::nullopt}; }
  static CountLaw poisson(double mean) { return {Kind::Poisson, mean, std::nullopt}; }
  static CountLaw from(EmpiricalLaw law) { return {Kind::Empirical, 0.0, std::move(law)}; }

  std::uint64_t sample(Engine& eng) const {
    switch (kind) {
      case Kind::Fixed:
        return static_cast<std::uint64_t>(mean);
      case Kind::Poisson:
        return setsim::poisson(eng, mean);
      case Kind::Empirical:
        return static_cast<std::uint64_t>(std::llround(std::max(0.0, empirical->sample(eng))));
    }
    return 0;
  }
};

/// Integer side a >= 2 whose square's boundary-pixel ratio (4a - 4)/a^2 is closest to `ratio`.
inline int square_side_for_ratio(double ratio) {
  if (!(ratio > 0.0)) throw InvalidArgument("perimeter/area ratio must be positive");
  if (ratio >= 1.0) return 2;
  auto f = [](double a) { return (4.0 * a - 4.0) / (a * a); };
  // Larger root of ratio * a^2 - 4a + 4 = 0; f decreases for a >= 2.
  const double root = (2.0 + 2.0 * std::sqrt(1.0 - ratio)) / ratio;
  if (root > 1e7) throw InvalidArgument("perimeter/area ratio too small for a square side");
  const int lo = std::max(2, static_cast<int>(std::floor(root)));
  const int hi = lo + 1;
  return std::abs(f(lo) - ratio) <= std::abs(f(hi) - ratio) ? lo : hi;
}

/// Boundary pixel count of a solid a x a square (a >= 2).
inline int square_perimeter(int side) { return 4 * side - 4; }

/// Perimeters of the squares realised from a ratio law.
inline EmpiricalLaw square_perimeter_law(const EmpiricalLaw& ratio_law) {
  std::vector<double> perimeters;
  for (double r : ratio_law.values()) perimeters.push_back(square_perimeter(square_side_for_ratio(r)));
  return EmpiricalLaw(std::move(perimeters));
}

/// Free side b of a fixed_side x b rectangle with the given boundary-pixel
/// perimeter, from 2 * fixed_side + 2b - 4 = perimeter. Empty when infeasible.
inline std::optional<int> rectangle_free_side(double perimeter, int fixed_side) {
  if (fixed_side < 1) throw InvalidArgument("fixed rectangle side must be at least 1");
  if (!(perimeter >= 2.0 * (fixed_side + 1))) return std::nullopt;
  return static_cast<int>(std::llround((perimeter + 4.0 - 2.0 * fixed_side) / 2.0));
}

struct Box {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct Placement {
  BinaryImage image;
  std::vector<Box> boxes;
  std::size_t requested = 0;
  std::size_t skipped = 0;
};

/// Random sequential adsorption of axis-aligned boxes: uniform proposals fully
/// inside the window, rejected when the box or its 8-neighbourhood meets an
/// earlier box, at most `max_attempts` per box before it is skipped.
inline Placement place_boxes_rsa(std::span<const Box> sizes, const Window& w, Engine& eng, int max_attempts = 200) {
  validate(w);
  Placement out{BinaryImage(w.width, w.height), {}, sizes.size(), 0};
  auto clashes = [&](const Box& b) {
    for (const auto& e : out.boxes) {
      if (b.x - 1 <= e.x + e.width - 1 && e.x <= b.x + b.width && b.y - 1 <= e.y + e.height - 1 &&
          e.y <= b.y + b.height)
        return true;
    }
    return false;
  };
  for (const auto& size : sizes) {
    if (size.width < 1 || size.height < 1 || size.width > w.width || size.height > w.height) {
      ++out.skipped;
      continue;
    }
    bool placed = false;
    for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
      Box b = size;
      b.x = static_cast<int>(uniform_index(eng, static_cast<std::uint64_t>(w.width - size.width + 1)));
      b.y = static_cast<int>(uniform_index(eng, static_cast<std::uint64_t>(w.height - size.height + 1)));
      if (clashes(b)) continue;
      out.boxes.push_back(b);
      placed = true;
    }
    if (!placed) ++out.skipped;
  }
  for (const auto& b : out.boxes)
    for (int y = b.y; y < b.y + b.height; ++y)
      for (int x = b.x; x < b.x + b.width; ++x) out.image.set(x, y);
  return out;
}

/// Disjoint squares whose sides realise ratios drawn from `ratio_law`.
inline Placement place_squares(const EmpiricalLaw& ratio_law, const CountLaw& count_law, const Window& w,
                               std::uint64_t seed) {
  Engine count_eng = make_engine(seed, Stream::Counts);
  Engine shape_eng = make_engine(seed, Stream::Shapes);
  Engine place_eng = make_engine(seed, Stream::Placement);
  const auto n = count_law.sample(count_eng);
  std::vector<Box> sizes;
  sizes.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const int a = square_side_for_ratio(ratio_law.sample(shape_eng));
    sizes.push_back({0, 0, a, a});
  }
  return place_boxes_rsa(sizes, w, place_eng);
}

inline BinaryImage simulate_squares(const EmpiricalLaw& ratio_law, const CountLaw& count_law, const Window& w,
                                    std::uint64_t seed) {
  return place_squares(ratio_law, count_law, w, seed).image;
}

/// Disjoint rectangles with one side `fixed_side` and perimeters drawn from
/// `perimeter_law`; each is turned by 90 degrees with probability 1/2.
/// Infeasible perimeters count as skipped.
inline Placement place_rectangles(const EmpiricalLaw& perimeter_law, const CountLaw& count_law, const Window& w,
                                  std::uint64_t seed, int fixed_side = 4) {
  Engine count_eng = make_engine(seed, Stream::Counts);
  Engine shape_eng = make_engine(seed, Stream::Shapes);
  Engine place_eng = make_engine(seed, Stream::Placement);
  const auto n = count_law.sample(count_eng);
  std::vector<Box> sizes;
  std::size_t infeasible = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto free_side = rectangle_free_side(perimeter_law.sample(shape_eng), fixed_side);
    const bool turned = bernoulli(shape_eng, 0.5);
    if (!free_side) {
      ++infeasible;
      continue;
    }
    sizes.push_back(turned ? Box{0, 0, *free_side, fixed_side} : Box{0, 0, fixed_side, *free_side});
  }
  auto out = place_boxes_rsa(sizes, w, place_eng);
  out.requested += infeasible;
  out.skipped += infeasible;
  return out;
}

inline BinaryImage simulate_rectangles(const EmpiricalLaw& perimeter_law, const CountLaw& count_law, const Window& w,
                                       std::uint64_t seed, int fixed_side = 4) {
  return place_rectangles(perimeter_law, count_law, w, seed, fixed_side).image;
}

struct EllipseParams {
  double intensity = 90.0 / (432.0 * 432.0);
  RadiusLaw semi_major = RadiusLaw::uniform(8.0, 20.0);
  RadiusLaw semi_minor = RadiusLaw::uniform(3.0, 8.0);
  /// Fixed orientation in radians; unset means uniform on [0, pi).
  std::optional<double> orientation;
};

/// Boolean model with elliptical grains.
inline BinaryImage simulate_ellipses(const EllipseParams& p, const Window& w, std::uint64_t seed) {
  validate(w);
  validate(p.semi_major, "ellipse semi-major law");
  validate(p.semi_minor, "ellipse semi-minor law");
  if (!(p.intensity > 0.0)) throw InvalidArgument("ellipse intensity must be positive");
  const double margin = std::max(p.semi_major.max, p.semi_minor.max);
  const double x_lo = -0.5 - margin;
  const double x_hi = w.width - 0.5 + margin;
  const double y_lo = -0.5 - margin;
  const double y_hi = w.height - 0.5 + margin;
  Engine eng = make_engine(seed, Stream::Germs);
  const auto n = poisson(eng, p.intensity * (x_hi - x_lo) * (y_hi - y_lo));
  BinaryImage img(w.width, w.height);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = uniform(eng, x_lo, x_hi);
    const double y = uniform(eng, y_lo, y_hi);
    const double a = p.semi_major.sample(eng);
    const double b = p.semi_minor.sample(eng);
    const double theta = p.orientation ? *p.orientation : uniform(eng, 0.0, std::numbers::pi);
    rasterize_ellipse(img, x, y, a, b, theta);
  }
  return img;
}

}  // namespace setsim
