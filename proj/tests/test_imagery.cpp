#include <catch_amalgamated.hpp>

#include <png.h>

#include <set>
#include <string>
#include <vector>

#include "setsim/components.hpp"
#include "setsim/image.hpp"
#include "setsim/image_io.hpp"
#include "setsim/rng.hpp"

using namespace setsim;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::vector<std::uint8_t> gray8_png(int w, int h, const std::vector<std::uint8_t>& gray) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  REQUIRE(png_image_write_to_memory(&image, nullptr, &size, 0, gray.data(), 0, nullptr));
  std::vector<std::uint8_t> out(size);
  REQUIRE(png_image_write_to_memory(&image, out.data(), &size, 0, gray.data(), 0, nullptr));
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> rgb_png() {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 2;
  image.height = 1;
  image.format = PNG_FORMAT_RGB;
  const std::vector<std::uint8_t> px{255, 0, 0, 0, 255, 0};
  png_alloc_size_t size = 0;
  png_image_write_to_memory(&image, nullptr, &size, 0, px.data(), 0, nullptr);
  std::vector<std::uint8_t> out(size);
  png_image_write_to_memory(&image, out.data(), &size, 0, px.data(), 0, nullptr);
  out.resize(size);
  return out;
}

BinaryImage random_image(int w, int h, double p, std::uint64_t seed) {
  Engine eng = make_engine(seed);
  BinaryImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, bernoulli(eng, p));
  return img;
}

std::set<std::pair<int, int>> as_set(const std::vector<PixelCoord>& ps, int dx = 0, int dy = 0) {
  std::set<std::pair<int, int>> s;
  for (const auto& p : ps) s.insert({p.x + dx, p.y + dy});
  return s;
}

}  // namespace

TEST_CASE("BinaryImage basics") {
  BinaryImage img(3, 2);
  CHECK(img.foreground_count() == 0);
  img.set(2, 1);
  CHECK(img.at(2, 1));
  CHECK_FALSE(img.at(-1, 0));
  CHECK_FALSE(img.at(3, 1));
  CHECK_FALSE(img.at(0, 2));
  CHECK_THROWS_AS(img.set(3, 0), InvalidArgument);
  CHECK_THROWS_AS(BinaryImage(0, 4), InvalidArgument);
  CHECK_THROWS_AS(BinaryImage(2, 2, std::vector<std::uint8_t>(3)), ShapeError);
  CHECK(img.inverted().foreground_count() == 5);
}

TEST_CASE("PBM decoding") {
  SECTION("2x2 all set") {
    const auto img = load_image(bytes_of("P1\n2 2\n1 1\n1 1\n"), ImageFormat::Pbm);
    CHECK(img.width() == 2);
    CHECK(img.foreground_count() == 4);
  }
  SECTION("comments and packed digits") {
    const auto img = load_image(bytes_of("P1 # c\n3 # w\n1\n010"), ImageFormat::Pbm);
    CHECK(img.foreground_count() == 1);
    CHECK(img.at(1, 0));
  }
  SECTION("P4 with padding bits") {
    std::vector<std::uint8_t> b = bytes_of("P4\n10 2\n");
    b.insert(b.end(), {0xFF, 0xC0, 0x80, 0x00});
    const auto img = load_image(b, ImageFormat::Pbm);
    CHECK(img.foreground_count() == 11);
    CHECK(img.at(9, 0));
    CHECK(img.at(0, 1));
    CHECK_FALSE(img.at(1, 1));
  }
  SECTION("400x400 background") {
    const BinaryImage blank(400, 400);
    const auto img = load_image(encode_pbm(blank), ImageFormat::Pbm);
    CHECK(img.width() == 400);
    CHECK(img.foreground_count() == 0);
  }
  SECTION("round trip") {
    const auto img = random_image(37, 11, 0.4, 5);
    CHECK(load_image(encode_pbm(img), ImageFormat::Pbm) == img);
  }
}

TEST_CASE("PBM errors report byte offsets") {
  try {
    (void)load_image(bytes_of("P1\n2 2\n1 1\n1 x\n"), ImageFormat::Pbm);
    FAIL("expected DecodeError");
  } catch (const DecodeError& e) {
    CHECK(e.offset() == 13);
    CHECK(std::string(e.what()).find("offset 13") != std::string::npos);
  }
  try {
    (void)load_image(bytes_of("P4\n8 2\n\xff"), ImageFormat::Pbm);
    FAIL("expected DecodeError");
  } catch (const DecodeError& e) {
    CHECK(e.offset() == 8);
  }
  CHECK_THROWS_AS(load_image(bytes_of("P1\n0 2\n"), ImageFormat::Pbm), DecodeError);
  CHECK_THROWS_AS(load_image(bytes_of("P5\n1 1\n"), ImageFormat::Pbm), DecodeError);
}

TEST_CASE("PNG decoding") {
  SECTION("8-bit gray threshold") {
    const auto png = gray8_png(4, 1, {0, 255, 127, 128});
    REQUIRE(detect_format(png) == ImageFormat::Png);
    const auto img = load_image(png, ImageFormat::Png, 127);
    CHECK_FALSE(img.at(0, 0));
    CHECK(img.at(1, 0));
    CHECK_FALSE(img.at(2, 0));
    CHECK(img.at(3, 0));
    CHECK(load_image(png, ImageFormat::Png, 254).foreground_count() == 1);
  }
  SECTION("1-bit round trip") {
    const auto img = random_image(19, 23, 0.3, 8);
    CHECK(load_image(encode_png(img), ImageFormat::Png) == img);
  }
  SECTION("errors") {
    CHECK_THROWS_AS(load_image(rgb_png(), ImageFormat::Png), UnsupportedFormat);
    auto png = gray8_png(4, 4, std::vector<std::uint8_t>(16, 200));
    png.resize(png.size() / 2);
    CHECK_THROWS_AS(load_image(png, ImageFormat::Png), DecodeError);
    CHECK_THROWS_AS(load_image(png, ImageFormat::Png, 256), InvalidArgument);
  }
  CHECK_FALSE(detect_format(bytes_of("GIF89a")).has_value());
}

TEST_CASE("labeling by connectivity") {
  BinaryImage img(4, 4);
  img.set(1, 1);
  img.set(2, 2);
  CHECK(label_components(img, Connectivity::Eight).size() == 1);
  CHECK(label_components(img, Connectivity::Four).size() == 2);
  CHECK(label_components(BinaryImage(5, 5)).empty());
  CHECK_THROWS_AS(connectivity_from_int(6), InvalidArgument);
}

TEST_CASE("3x3 block") {
  BinaryImage img(7, 7);
  for (int y = 2; y < 5; ++y)
    for (int x = 2; x < 5; ++x) img.set(x, y);
  const auto comps = label_components(img);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0].pixels.size() == 9);
  CHECK(comps[0].boundary.size() == 8);
  CHECK(comps[0].bbox == BoundingBox{2, 2, 4, 4});
  CHECK_FALSE(comps[0].touches_border);
  CHECK_FALSE(std::binary_search(comps[0].boundary.begin(), comps[0].boundary.end(), PixelCoord{3, 3}, RowMajorLess{}));
}

TEST_CASE("off-image neighbours count as background") {
  BinaryImage img(3, 3, std::vector<std::uint8_t>(9, 1));
  const auto comps = label_components(img);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0].boundary.size() == 8);
  CHECK(comps[0].touches_border);
}

TEST_CASE("filtering") {
  BinaryImage img(10, 10);
  img.set(0, 5);
  for (int y = 3; y < 6; ++y)
    for (int x = 4; x < 7; ++x) img.set(x, y);
  const auto comps = label_components(img);
  REQUIRE(comps.size() == 2);

  const auto big = filter_components(comps, 2, false);
  REQUIRE(big.size() == 1);
  CHECK(big[0].pixels.size() == 9);

  const auto inner = filter_components(comps, 1, true);
  REQUIRE(inner.size() == 1);
  CHECK(inner[0].pixels.size() == 9);
  CHECK(filter_components(inner, 1, true).size() == 1);
  CHECK_THROWS_AS(filter_components(comps, 0, false), InvalidArgument);

  LabelingConfig cfg;
  cfg.min_pixels = 2;
  CHECK(extract_components(img, cfg).size() == 1);
}

TEST_CASE("labeling properties on random images") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto conn = seed % 2 ? Connectivity::Eight : Connectivity::Four;
    const auto img = random_image(30, 25, 0.45, seed);
    const auto comps = label_components(img, conn);

    std::size_t total = 0;
    std::set<std::pair<int, int>> seen;
    for (const auto& c : comps) {
      total += c.pixels.size();
      for (const auto& p : c.pixels) {
        CHECK(img.at(p));
        seen.insert({p.x, p.y});
      }
      REQUIRE_FALSE(c.boundary.empty());
      for (const auto& b : c.boundary) CHECK(std::binary_search(c.pixels.begin(), c.pixels.end(), b, RowMajorLess{}));
      const bool on_edge = c.bbox.min_x == 0 || c.bbox.min_y == 0 || c.bbox.max_x == 29 || c.bbox.max_y == 24;
      CHECK(c.touches_border == on_edge);
    }
    CHECK(total == img.foreground_count());
    CHECK(seen.size() == total);

    // Translation into a larger canvas.
    BinaryImage shifted(40, 35);
    for (int y = 0; y < 25; ++y)
      for (int x = 0; x < 30; ++x)
        if (img.at(x, y)) shifted.set(x + 4, y + 6);
    const auto moved = label_components(shifted, conn);
    REQUIRE(moved.size() == comps.size());
    for (std::size_t i = 0; i < comps.size(); ++i) {
      CHECK(as_set(moved[i].pixels) == as_set(comps[i].pixels, 4, 6));
    }

    // A component rendered alone labels back to itself.
    for (const auto& c : comps) {
      const auto alone = label_components(render_component(c, 30, 25), conn);
      REQUIRE(alone.size() == 1);
      CHECK(alone[0].pixels == c.pixels);
      CHECK(alone[0].boundary == c.boundary);
    }
  }
}

TEST_CASE("components csv") {
  BinaryImage img(3, 3);
  img.set(1, 1);
  const auto comps = label_components(img);
  CHECK(components_csv(comps) == "id,x,y,is_boundary\n1,1,1,1\n");
}
