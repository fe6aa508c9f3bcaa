#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "setsim/error.hpp"
#include "setsim/image.hpp"

namespace setsim {

enum class ImageFormat { Pbm, Png };

/// Sniffs the magic bytes. PBM covers P1 (ASCII) and P4 (binary).
inline std::optional<ImageFormat> detect_format(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '1' || bytes[1] == '4')) return ImageFormat::Pbm;
  static constexpr std::uint8_t png_magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(png_magic, png_magic + 8, bytes.begin())) return ImageFormat::Png;
  return std::nullopt;
}

namespace detail {

class PbmReader {
 public:
  PbmReader(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t pos() const noexcept { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int read_positive_int(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1 << 28)) throw DecodeError(std::string("PBM ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw DecodeError(std::string("PBM: expected ") + what, start);
    if (v < 1) throw DecodeError(std::string("PBM ") + what + " must be positive", start);
    return static_cast<int>(v);
  }

  std::uint8_t next(const char* what) {
    if (pos_ >= bytes_.size()) throw DecodeError(std::string("PBM: unexpected end of data while reading ") + what, pos_);
    return bytes_[pos_++];
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

inline BinaryImage decode_pbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '1' && bytes[1] != '4'))
    throw DecodeError("PBM: bad magic number", 0);
  const bool ascii = bytes[1] == '1';
  PbmReader in(bytes, 2);
  const int w = in.read_positive_int("width");
  const int h = in.read_positive_int("height");
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));

  if (ascii) {
    for (auto& m : mask) {
      in.skip_space_and_comments();
      const auto offset = in.pos();
      const auto c = in.next("pixel");
      if (c != '0' && c != '1') throw DecodeError("PBM: expected '0' or '1'", offset);
      m = c == '1';
    }
  } else {
    // Exactly one whitespace byte separates the header from the raster.
    const auto offset = in.pos();
    if (!std::isspace(in.next("header terminator"))) throw DecodeError("PBM: missing whitespace after header", offset);
    const int row_bytes = (w + 7) / 8;
    for (int y = 0; y < h; ++y) {
      for (int b = 0; b < row_bytes; ++b) {
        const std::uint8_t byte = in.next("raster");
        for (int bit = 0; bit < 8; ++bit) {
          const int x = b * 8 + bit;
          if (x >= w) break;
          mask[static_cast<std::size_t>(y) * w + x] = (byte >> (7 - bit)) & 1;
        }
      }
    }
  }
  return BinaryImage(w, h, std::move(mask));
}

struct PngSource {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

struct PngErrorText {
  char message[256];
};

inline void png_read_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (n > src->size - src->pos) png_error(png, "unexpected end of data");
  std::memcpy(out, src->data + src->pos, n);
  src->pos += n;
}

inline void png_write_memory(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

inline void png_flush_noop(png_structp) {}

[[noreturn]] inline void png_on_error(png_structp png, png_const_charp msg) {
  auto* text = static_cast<PngErrorText*>(png_get_error_ptr(png));
  std::snprintf(text->message, sizeof text->message, "%s", msg);
  png_longjmp(png, 1);
}

inline void png_on_warning(png_structp, png_const_charp) {}

// libpng reports errors by longjmp. Everything with a destructor is created
// before setjmp so nothing is skipped when the jump lands.
inline BinaryImage decode_png(std::span<const std::uint8_t> bytes, int threshold) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw DecodeError("PNG: bad signature", 0);

  PngSource src{bytes.data(), bytes.size(), 0};
  PngErrorText err{};
  std::vector<std::uint8_t> gray;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0;
  png_uint_32 h = 0;
  int bit_depth = 0;
  int color_type = 0;
  bool supported = true;

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_on_error, png_on_warning);
  if (png == nullptr) throw Error("PNG: cannot create decoder");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("PNG: cannot create decoder");
  }
  if (setjmp(png_jmpbuf(png))) {
    const std::size_t offset = src.pos;
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError(std::string("PNG: ") + err.message, offset);
  }

  png_set_read_fn(png, &src, png_read_memory);
  png_read_info(png, info);
  png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_GRAY_ALPHA) {
    supported = false;
  } else {
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    gray.resize(static_cast<std::size_t>(w) * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = gray.data() + static_cast<std::size_t>(y) * w;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (!supported) throw UnsupportedFormat("PNG: only grayscale images (1- to 16-bit, optional alpha) are supported");
  for (auto& v : gray) v = v > threshold ? 1 : 0;
  return BinaryImage(static_cast<int>(w), static_cast<int>(h), std::move(gray));
}

}  // namespace detail

/// Decodes `bytes`. For PBM a set bit is foreground; for PNG a gray value
/// strictly above `threshold` is foreground (white = foreground).
inline BinaryImage load_image(std::span<const std::uint8_t> bytes, ImageFormat format, int threshold = 127) {
  if (threshold < 0 || threshold > 255) throw InvalidArgument("threshold must lie in [0, 255]");
  switch (format) {
    case ImageFormat::Pbm:
      return detail::decode_pbm(bytes);
    case ImageFormat::Png:
      return detail::decode_png(bytes, threshold);
  }
  throw UnsupportedFormat("unknown image format");
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read " + path.string());
  return bytes;
}

inline BinaryImage load_image_file(const std::filesystem::path& path, int threshold = 127, bool invert = false) {
  const auto bytes = read_file_bytes(path);
  const auto format = detect_format(bytes);
  if (!format) throw UnsupportedFormat(path.string() + ": not a PBM (P1/P4) or PNG file");
  try {
    auto img = load_image(bytes, *format, threshold);
    return invert ? img.inverted() : img;
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what(), e.offset());
  }
}

/// Binary PBM (P4), foreground written as set bits.
inline std::vector<std::uint8_t> encode_pbm(const BinaryImage& img) {
  const std::string header = "P4\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const int row_bytes = (img.width() + 7) / 8;
  out.reserve(out.size() + static_cast<std::size_t>(row_bytes) * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int b = 0; b < row_bytes; ++b) {
      std::uint8_t byte = 0;
      for (int bit = 0; bit < 8; ++bit) {
        if (img.at(b * 8 + bit, y)) byte |= static_cast<std::uint8_t>(0x80 >> bit);
      }
      out.push_back(byte);
    }
  }
  return out;
}

/// 1-bit grayscale PNG, foreground written white.
inline std::vector<std::uint8_t> encode_png(const BinaryImage& img) {
  std::vector<std::uint8_t> out;
  detail::PngErrorText err{};
  const int row_bytes = (img.width() + 7) / 8;
  std::vector<std::uint8_t> packed(static_cast<std::size_t>(row_bytes) * img.height(), 0);
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) {
    rows[y] = packed.data() + static_cast<std::size_t>(y) * row_bytes;
    for (int x = 0; x < img.width(); ++x) {
      if (img.at(x, y)) rows[y][x / 8] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
    }
  }

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_on_error, detail::png_on_warning);
  if (png == nullptr) throw Error("PNG: cannot create encoder");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("PNG: cannot create encoder");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(std::string("PNG encode failed: ") + err.message);
  }
  png_set_write_fn(png, &out, detail::png_write_memory, detail::png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 1,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

inline void save_image(const std::filesystem::path& path, const BinaryImage& img, ImageFormat format) {
  write_file_bytes(path, format == ImageFormat::Png ? encode_png(img) : encode_pbm(img));
}

}  // namespace setsim
