#pragma once

// Raster image container and PNG / PPM / PGM codecs.

#include <png.h>

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "myco/grid.hpp"

namespace myco {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Field<Rgb>;

class ImageError : public std::runtime_error {
 public:
  enum class Kind { unreadable, unsupported_format, corrupt, write_failed };

  ImageError(Kind kind, const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), kind_(kind), path_(path) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

namespace detail {

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ImageError(ImageError::Kind::unreadable, path.string(), "cannot open file");
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw ImageError(ImageError::Kind::unreadable, path.string(), "read error");
  }
  return bytes;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ImageError(ImageError::Kind::write_failed, path.string(), "cannot open for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) {
    throw ImageError(ImageError::Kind::write_failed, path.string(), "write error");
  }
}

/// Parses the header of a binary netpbm file (P5 / P6).  Returns the offset
/// of the first raster byte.
struct NetpbmHeader {
  char kind = 0;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

inline NetpbmHeader parse_netpbm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  NetpbmHeader h;
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw ImageError(ImageError::Kind::unsupported_format, path, "not a netpbm file");
  }
  h.kind = static_cast<char>(bytes[1]);
  std::size_t pos = 2;
  auto next_int = [&]() -> int {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw ImageError(ImageError::Kind::corrupt, path, "malformed netpbm header");
    }
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > (1L << 30)) {
        throw ImageError(ImageError::Kind::corrupt, path, "netpbm header value too large");
      }
      ++pos;
    }
    return static_cast<int>(value);
  };
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw ImageError(ImageError::Kind::corrupt, path, "malformed netpbm header");
  }
  ++pos;
  h.data_offset = pos;
  if (h.width <= 0 || h.height <= 0) {
    throw ImageError(ImageError::Kind::corrupt, path, "zero image dimension");
  }
  if (h.maxval != 255) {
    throw ImageError(ImageError::Kind::unsupported_format, path, "only 8-bit netpbm is supported");
  }
  return h;
}

inline bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

struct PngReadContext {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* ctx = static_cast<PngReadContext*>(png_get_io_ptr(png));
  if (ctx->offset + count > ctx->bytes->size()) {
    png_error(png, "unexpected end of data");
  }
  std::memcpy(out, ctx->bytes->data() + ctx->offset, count);
  ctx->offset += count;
}

inline void png_error_handler(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

inline RgbImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler,
                                           png_warning_handler);
  if (!png) throw ImageError(ImageError::Kind::corrupt, path, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageError(ImageError::Kind::corrupt, path, "libpng init failed");
  }
  PngReadContext ctx{&bytes, 0};
  RgbImage img;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> raster;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError(ImageError::Kind::corrupt, path, "corrupt PNG: " + err);
  }
  png_set_read_fn(png, &ctx, png_read_from_memory);
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != width * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError(ImageError::Kind::unsupported_format, path, "PNG layout not convertible to RGB8");
  }
  raster.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img = RgbImage(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = Rgb{raster[3 * i], raster[3 * i + 1], raster[3 * i + 2]};
  }
  return img;
}

inline void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

inline void png_flush_noop(png_structp) {}

/// Encodes 8-bit rows with `channels` = 1 (gray), 3 (RGB) or 4 (RGBA).  Compression
/// settings are fixed so identical rasters produce identical files.
inline std::vector<std::uint8_t> encode_png(const std::uint8_t* raster, int width, int height,
                                            int channels, const std::string& path) {
  std::vector<std::uint8_t> out;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler,
                                            png_warning_handler);
  if (!png) throw ImageError(ImageError::Kind::write_failed, path, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageError(ImageError::Kind::write_failed, path, "libpng init failed");
  }
  std::vector<png_const_bytep> rows(static_cast<std::size_t>(height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError(ImageError::Kind::write_failed, path, "PNG encode failed: " + err);
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1   ? PNG_COLOR_TYPE_GRAY
               : channels == 4 ? PNG_COLOR_TYPE_RGB_ALPHA
                               : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = raster + static_cast<std::size_t>(y) * width * channels;
  }
  png_write_rows(png, const_cast<png_bytepp>(rows.data()), static_cast<png_uint_32>(height));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace detail

/// Decodes a PNG (8/16-bit, any colour type; alpha dropped) or binary PPM.
/// The format is sniffed from the file content, not the extension.
inline RgbImage load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_bytes(path);
  const std::string name = path.string();
  if (detail::has_png_signature(bytes)) return detail::decode_png(bytes, name);
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    if (bytes[1] != '6') {
      throw ImageError(ImageError::Kind::unsupported_format, name,
                       std::string("netpbm variant P") + static_cast<char>(bytes[1]) + " is not supported");
    }
    const auto h = detail::parse_netpbm(bytes, name);
    const std::size_t need = static_cast<std::size_t>(h.width) * h.height * 3;
    if (bytes.size() - h.data_offset < need) {
      throw ImageError(ImageError::Kind::corrupt, name, "truncated PPM raster");
    }
    RgbImage img(h.width, h.height);
    const auto* p = bytes.data() + h.data_offset;
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = Rgb{p[3 * i], p[3 * i + 1], p[3 * i + 2]};
    return img;
  }
  throw ImageError(ImageError::Kind::unsupported_format, name, "unrecognised image format");
}

inline void save_ppm(const RgbImage& img, const std::filesystem::path& path) {
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.size() * 3);
  for (const auto& px : img.data()) {
    bytes.push_back(px.r);
    bytes.push_back(px.g);
    bytes.push_back(px.b);
  }
  detail::write_bytes(path, bytes);
}

inline void save_png(const RgbImage& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> raster;
  raster.reserve(img.size() * 3);
  for (const auto& px : img.data()) {
    raster.push_back(px.r);
    raster.push_back(px.g);
    raster.push_back(px.b);
  }
  detail::write_bytes(path, detail::encode_png(raster.data(), img.width(), img.height(), 3, path.string()));
}

/// Writes by extension: `.png`, otherwise PPM.
inline void save_image(const RgbImage& img, const std::filesystem::path& path) {
  if (detail::lower_extension(path) == ".png") {
    save_png(img, path);
  } else {
    save_ppm(img, path);
  }
}

/// Mask file: binary PGM (P5), 0 = non-conductive, 255 = conductive.
inline std::vector<std::uint8_t> encode_mask_pgm(const Mask& mask) {
  const std::string header =
      "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + mask.size());
  for (auto b : mask.data()) bytes.push_back(b ? 255 : 0);
  return bytes;
}

inline void save_mask_pgm(const Mask& mask, const std::filesystem::path& path) {
  detail::write_bytes(path, encode_mask_pgm(mask));
}

/// Reads a P5 mask.  Any nonzero byte is conductive.
inline Mask load_mask_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_bytes(path);
  const std::string name = path.string();
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ImageError(ImageError::Kind::unsupported_format, name, "mask must be a binary PGM (P5)");
  }
  const auto h = detail::parse_netpbm(bytes, name);
  const std::size_t need = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < need) {
    throw ImageError(ImageError::Kind::corrupt, name, "truncated PGM raster");
  }
  Mask m(h.width, h.height);
  for (std::size_t i = 0; i < need; ++i) m[i] = bytes[h.data_offset + i] != 0;
  return m;
}

inline void save_mask_png(const Mask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> raster(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) raster[i] = mask[i] ? 255 : 0;
  detail::write_bytes(path, detail::encode_png(raster.data(), mask.width(), mask.height(), 1, path.string()));
}

}  // namespace myco
