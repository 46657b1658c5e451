#include "forge/png.hpp"

#include <png.h>
#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <string>

#include "forge/error.hpp"
#include "forge/io.hpp"

namespace forge {

namespace {

// libpng reports errors by longjmp; the message is parked here first.
thread_local char g_png_error[256];

[[noreturn]] void on_png_error(png_structp png, png_const_charp msg) {
  std::snprintf(g_png_error, sizeof g_png_error, "png: %s", msg);
  png_longjmp(png, 1);
}
void on_png_warning(png_structp, png_const_charp) {}

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void read_cb(png_structp png, png_bytep out, png_size_t n) {
  auto* c = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (n > c->bytes.size() - c->pos) png_error(png, "truncated PNG");
  std::memcpy(out, c->bytes.data() + c->pos, n);
  c->pos += n;
}

void write_cb(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void flush_cb(png_structp) {}

}  // namespace

Plane8 Image8::channel(std::uint32_t c) const {
  Plane8 p{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height)};
  for (std::size_t i = 0; i < p.px.size(); ++i) p.px[i] = px[i * channels + c];
  return p;
}

Image8 interleave(std::span<const Plane8> planes) {
  if (planes.empty()) throw Error(ErrorCode::InvalidArgument, "no planes");
  const auto w = planes[0].width;
  const auto h = planes[0].height;
  for (const auto& p : planes) {
    if (p.width != w || p.height != h || p.px.size() != static_cast<std::size_t>(w) * h) {
      throw Error(ErrorCode::SizeMismatch, "planes differ in size");
    }
  }
  Image8 img{w, h, static_cast<std::uint32_t>(planes.size()), {}};
  img.px.resize(static_cast<std::size_t>(w) * h * planes.size());
  for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
    for (std::size_t c = 0; c < planes.size(); ++c) img.px[i * planes.size() + c] = planes[c].px[i];
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const Image8& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw Error(ErrorCode::InvalidArgument, "PNG export supports gray or RGB only");
  }
  if (img.width == 0 || img.height == 0 ||
      img.px.size() != static_cast<std::size_t>(img.width) * img.height * img.channels) {
    throw Error(ErrorCode::SizeMismatch, "pixel buffer does not match PNG dimensions");
  }
  std::vector<std::uint8_t> out;
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, g_png_error);
  }
  {
    png_set_write_fn(png, &out, write_cb, flush_cb);
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 1);
    png_set_compression_strategy(png, Z_RLE);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
    png_write_info(png, info);
    for (std::uint32_t y = 0; y < img.height; ++y) {
      png_write_row(png, const_cast<png_bytep>(img.px.data() + y * stride));
    }
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const Image8& img, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_png(img));
}

void write_png_gray(const Plane8& plane, const std::filesystem::path& path) {
  write_png(interleave(std::span(&plane, 1)), path);
}

void write_png_rgb(const Plane8& r, const Plane8& g, const Plane8& b,
                   const std::filesystem::path& path) {
  const Plane8 planes[] = {r, g, b};
  write_png(interleave(planes), path);
}

Image8 decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::CorruptFile, "not a PNG");
  }
  ReadCursor cursor{bytes, 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
  png_infop info = png_create_info_struct(png);
  Image8 img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::CorruptFile, g_png_error);
  }
  {
    png_set_read_fn(png, &cursor, read_cb);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    img.channels = png_get_channels(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    if (row_bytes != static_cast<std::size_t>(img.width) * img.channels) {
      png_error(png, "unexpected row layout");
    }
    img.px.resize(row_bytes * img.height);
    for (std::uint32_t y = 0; y < img.height; ++y) png_read_row(png, img.px.data() + y * row_bytes, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Image8 read_png(const std::filesystem::path& path) { return decode_png(io::read_file(path)); }

}  // namespace forge
