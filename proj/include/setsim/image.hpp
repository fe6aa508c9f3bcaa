#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "setsim/error.hpp"

namespace setsim {

struct PixelCoord {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Row-major order: by row, then by column.
struct RowMajorLess {
  bool operator()(const PixelCoord& a, const PixelCoord& b) const noexcept {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  }
};

/// Rectangular foreground/background grid. Queries outside the grid answer
/// background, which is what both labeling and disc occupancy rely on.
class BinaryImage {
 public:
  BinaryImage(int width, int height) : BinaryImage(width, height, {}) {}

  /// `mask` is row-major, nonzero = foreground; empty means all background.
  BinaryImage(int width, int height, std::vector<std::uint8_t> mask)
      : width_(width), height_(height), mask_(std::move(mask)) {
    if (width < 1 || height < 1) throw InvalidArgument("image dimensions must be at least 1x1");
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (mask_.empty()) mask_.assign(n, 0);
    if (mask_.size() != n) throw ShapeError("mask size does not match image dimensions");
    for (auto& v : mask_) v = v ? 1 : 0;
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool at(int x, int y) const noexcept { return contains(x, y) && mask_[index(x, y)] != 0; }
  bool at(PixelCoord p) const noexcept { return at(p.x, p.y); }

  void set(int x, int y, bool foreground = true) {
    if (!contains(x, y)) throw InvalidArgument("pixel outside image");
    mask_[index(x, y)] = foreground ? 1 : 0;
  }

  std::size_t foreground_count() const noexcept {
    std::size_t n = 0;
    for (auto v : mask_) n += v;
    return n;
  }

  BinaryImage inverted() const {
    BinaryImage out = *this;
    for (auto& v : out.mask_) v = v ? 0 : 1;
    return out;
  }

  std::span<const std::uint8_t> data() const noexcept { return mask_; }

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> mask_;
};

}  // namespace setsim
