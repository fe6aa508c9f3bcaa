#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "setsim/image.hpp"

namespace setsim {

enum class Connectivity { Four = 4, Eight = 8 };

inline Connectivity connectivity_from_int(int n) {
  if (n == 4) return Connectivity::Four;
  if (n == 8) return Connectivity::Eight;
  throw InvalidArgument("connectivity must be 4 or 8");
}

struct BoundingBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = 0;
  int max_y = 0;

  int width() const noexcept { return max_x - min_x + 1; }
  int height() const noexcept { return max_y - min_y + 1; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// One connected foreground region. `pixels` and `boundary` are both sorted
/// row-major; a pixel is on the boundary when one of its 4-neighbours is
/// background or lies off the image.
struct Component {
  int id = 0;
  std::vector<PixelCoord> pixels;
  std::vector<PixelCoord> boundary;
  BoundingBox bbox;
  bool touches_border = false;

  std::size_t area() const noexcept { return pixels.size(); }
};

namespace detail {

inline bool has_background_4_neighbour(const BinaryImage& img, PixelCoord p) {
  return !img.at(p.x - 1, p.y) || !img.at(p.x + 1, p.y) || !img.at(p.x, p.y - 1) || !img.at(p.x, p.y + 1);
}

}  // namespace detail

/// Labels components in order of their first pixel in a row-major scan; ids start at 1.
inline std::vector<Component> label_components(const BinaryImage& img, Connectivity connectivity = Connectivity::Eight) {
  static constexpr int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
  const int n_neighbours = connectivity == Connectivity::Eight ? 8 : 4;
  const int w = img.width();
  const int h = img.height();

  std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, 0);
  auto label_at = [&](int x, int y) -> std::int32_t& { return label[static_cast<std::size_t>(y) * w + x]; };

  std::vector<Component> out;
  std::vector<PixelCoord> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!img.at(x, y) || label_at(x, y) != 0) continue;

      Component comp;
      comp.id = static_cast<int>(out.size()) + 1;
      label_at(x, y) = comp.id;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        comp.pixels.push_back(p);
        for (int k = 0; k < n_neighbours; ++k) {
          const int nx = p.x + dx8[k];
          const int ny = p.y + dy8[k];
          if (img.at(nx, ny) && label_at(nx, ny) == 0) {
            label_at(nx, ny) = comp.id;
            stack.push_back({nx, ny});
          }
        }
      }

      std::sort(comp.pixels.begin(), comp.pixels.end(), RowMajorLess{});
      comp.bbox = {comp.pixels.front().x, comp.pixels.front().y, comp.pixels.front().x, comp.pixels.front().y};
      for (const auto& p : comp.pixels) {
        comp.bbox.min_x = std::min(comp.bbox.min_x, p.x);
        comp.bbox.max_x = std::max(comp.bbox.max_x, p.x);
        comp.bbox.min_y = std::min(comp.bbox.min_y, p.y);
        comp.bbox.max_y = std::max(comp.bbox.max_y, p.y);
        if (detail::has_background_4_neighbour(img, p)) comp.boundary.push_back(p);
      }
      comp.touches_border =
          comp.bbox.min_x == 0 || comp.bbox.min_y == 0 || comp.bbox.max_x == w - 1 || comp.bbox.max_y == h - 1;
      out.push_back(std::move(comp));
    }
  }
  return out;
}

/// Keeps components with at least `min_pixels` pixels, dropping those touching
/// the image border when `discard_border` is set. Input order is preserved.
inline std::vector<Component> filter_components(std::span<const Component> comps, std::size_t min_pixels,
                                                bool discard_border) {
  if (min_pixels < 1) throw InvalidArgument("min_pixels must be at least 1");
  std::vector<Component> out;
  for (const auto& c : comps) {
    if (c.pixels.size() >= min_pixels && !(discard_border && c.touches_border)) out.push_back(c);
  }
  return out;
}

struct LabelingConfig {
  Connectivity connectivity = Connectivity::Eight;
  std::size_t min_pixels = 1;
  bool discard_border = false;
};

inline std::vector<Component> extract_components(const BinaryImage& img, const LabelingConfig& cfg = {}) {
  const auto all = label_components(img, cfg.connectivity);
  if (cfg.min_pixels <= 1 && !cfg.discard_border) return all;
  return filter_components(all, cfg.min_pixels, cfg.discard_border);
}

/// Draws `comp` alone into a fresh image, its pixels shifted by (dx, dy).
inline BinaryImage render_component(const Component& comp, int width, int height, int dx = 0, int dy = 0) {
  BinaryImage img(width, height);
  for (const auto& p : comp.pixels) img.set(p.x + dx, p.y + dy);
  return img;
}

/// Debug dump: one row per pixel, `id,x,y,is_boundary`.
inline std::string components_csv(std::span<const Component> comps) {
  std::ostringstream out;
  out << "id,x,y,is_boundary\n";
  for (const auto& c : comps) {
    for (const auto& p : c.pixels) {
      const bool on_boundary = std::binary_search(c.boundary.begin(), c.boundary.end(), p, RowMajorLess{});
      out << c.id << ',' << p.x << ',' << p.y << ',' << (on_boundary ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

}  // namespace setsim
