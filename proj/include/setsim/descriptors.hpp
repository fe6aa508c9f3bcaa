#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "setsim/components.hpp"
#include "setsim/error.hpp"
#include "setsim/image.hpp"

namespace setsim {

struct PixelOffset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const PixelOffset&, const PixelOffset&) = default;
};

/// Lattice points of the closed disc of integer radius r.
struct DiscMask {
  int radius = 0;
  std::vector<PixelOffset> offsets;

  std::size_t pixel_count() const noexcept { return offsets.size(); }
};

inline DiscMask disc_mask(int r) {
  if (r < 1) throw InvalidArgument("disc radius must be at least 1 pixel");
  DiscMask mask{r, {}};
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r * r) mask.offsets.push_back({dx, dy});
    }
  }
  return mask;
}

/// Number of mask pixels around `z` that land on foreground of `img`.
inline std::size_t covered_count(const BinaryImage& img, PixelCoord z, const DiscMask& mask) {
  std::size_t n = 0;
  for (const auto& o : mask.offsets) n += img.at(z.x + o.dx, z.y + o.dy) ? 1 : 0;
  return n;
}

/// Fraction of the disc around `z` covered by foreground. With `restrict_to`,
/// only that component's pixels count as foreground.
inline double occupancy(const BinaryImage& img, PixelCoord z, const DiscMask& mask,
                        const Component* restrict_to = nullptr) {
  if (restrict_to == nullptr) {
    return static_cast<double>(covered_count(img, z, mask)) / static_cast<double>(mask.pixel_count());
  }
  const auto alone = render_component(*restrict_to, img.width(), img.height());
  return static_cast<double>(covered_count(alone, z, mask)) / static_cast<double>(mask.pixel_count());
}

/// Boundary curvature from disc occupancy K at radius r: (3*pi/r)(K - 1/2).
/// Reported for diagnostics; the test statistics use K directly.
inline double curvature_estimate(double occupancy_value, int r) {
  if (r < 1) throw InvalidArgument("disc radius must be at least 1 pixel");
  return 3.0 * std::numbers::pi / r * (occupancy_value - 0.5);
}

/// Normalised histogram of occupancy values over `bins` equal cells of [0, 1];
/// the last cell is closed so that K = 1 is kept.
struct TestingFunction {
  int bins = 0;
  std::vector<double> values;
  std::size_t support_size = 0;
};

/// Index in [0, bins) of the cell [k/bins, (k+1)/bins) holding `value`.
inline int occupancy_bin(double value, int bins) {
  int k = static_cast<int>(std::floor(value * bins));
  // floor(value * bins) can land one cell off near a cell edge; settle it
  // against the edges as doubles.
  if (k > 0 && value < static_cast<double>(k) / bins) --k;
  if (k + 1 < bins && value >= static_cast<double>(k + 1) / bins) ++k;
  return std::clamp(k, 0, bins - 1);
}

inline TestingFunction testing_function(std::span<const double> occupancies, int bins) {
  if (bins < 2) throw InvalidArgument("testing function needs at least 2 bins");
  if (occupancies.empty()) throw InsufficientData("testing function of an empty boundary");
  TestingFunction tf{bins, std::vector<double>(static_cast<std::size_t>(bins), 0.0), occupancies.size()};
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double k : occupancies) {
    if (!(k >= 0.0 && k <= 1.0)) throw InvalidArgument("occupancy values must lie in [0, 1]");
    ++counts[static_cast<std::size_t>(occupancy_bin(k, bins))];
  }
  const auto n = static_cast<double>(occupancies.size());
  for (std::size_t i = 0; i < counts.size(); ++i) tf.values[i] = static_cast<double>(counts[i]) / n;
  return tf;
}

/// Boundary pixels over all pixels.
inline double perimeter_area_ratio(const Component& comp) {
  if (comp.pixels.empty()) throw InvalidArgument("component without pixels");
  return static_cast<double>(comp.boundary.size()) / static_cast<double>(comp.pixels.size());
}

enum class OccupancyScope {
  Component,  ///< only the component's own pixels fill the disc
  Image,      ///< any foreground pixel of the image fills the disc
};

struct DescriptorConfig {
  int radius = 5;
  int bins = 10;
  OccupancyScope scope = OccupancyScope::Component;
};

struct ShapeDescriptor {
  int component_id = 0;
  double ratio = 0.0;
  TestingFunction curve;
};

/// Occupancy at every boundary pixel of `comp`, in boundary order.
inline std::vector<double> boundary_occupancies(const BinaryImage& img, const Component& comp, const DiscMask& mask,
                                                OccupancyScope scope) {
  std::vector<double> out;
  out.reserve(comp.boundary.size());
  const auto total = static_cast<double>(mask.pixel_count());
  if (scope == OccupancyScope::Image) {
    for (const auto& z : comp.boundary) out.push_back(static_cast<double>(covered_count(img, z, mask)) / total);
    return out;
  }
  // Local raster of the component padded by the radius; off-raster counts as background.
  const int pad = mask.radius;
  const BinaryImage alone =
      render_component(comp, comp.bbox.width() + 2 * pad, comp.bbox.height() + 2 * pad, pad - comp.bbox.min_x,
                       pad - comp.bbox.min_y);
  for (const auto& z : comp.boundary) {
    const PixelCoord local{z.x - comp.bbox.min_x + pad, z.y - comp.bbox.min_y + pad};
    out.push_back(static_cast<double>(covered_count(alone, local, mask)) / total);
  }
  return out;
}

inline ShapeDescriptor describe_component(const BinaryImage& img, const Component& comp, const DescriptorConfig& cfg) {
  const auto mask = disc_mask(cfg.radius);
  const auto ks = boundary_occupancies(img, comp, mask, cfg.scope);
  return {comp.id, perimeter_area_ratio(comp), testing_function(ks, cfg.bins)};
}

inline std::vector<ShapeDescriptor> describe_components(const BinaryImage& img, std::span<const Component> comps,
                                                        const DescriptorConfig& cfg) {
  std::vector<ShapeDescriptor> out;
  out.reserve(comps.size());
  for (const auto& c : comps) out.push_back(describe_component(img, c, cfg));
  return out;
}

}  // namespace setsim
