// Copyright 2026 The seedtrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "seedtrack/png_io.h"

#include <png.h>

#include <csetjmp>
#include <cstring>
#include <cstdio>
#include <memory>
#include <vector>

#include "seedtrack/errors.h"

namespace seedtrack::png {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw StorageError("cannot open " + path.string());
  return f;
}

[[noreturn]] void on_png_error(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf != nullptr) *buf = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_nothing(png_structp) {}

template <typename Sample>
std::vector<std::uint8_t> encode_impl(Resolution res, int color_type, int channels,
                                      const Sample* data) {
  std::vector<std::uint8_t> out;
  std::string err;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (png == nullptr) throw StorageError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<std::size_t>(res.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw StorageError("png encode: " + err);
  }
  png_set_write_fn(png, &out, append_bytes, flush_nothing);
  constexpr int kBits = sizeof(Sample) * 8;
  png_set_IHDR(png, info, static_cast<png_uint_32>(res.width),
               static_cast<png_uint_32>(res.height), kBits, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if constexpr (kBits == 16) png_set_swap(png);
  const std::size_t stride = static_cast<std::size_t>(res.width) * channels;
  for (int y = 0; y < res.height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(const_cast<Sample*>(data + y * stride));
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  File f = open(path, "wb");
  if (std::fwrite(bytes.data(), 1, bytes.size(), f.get()) != bytes.size()) {
    throw StorageError("short write to " + path.string());
  }
  if (std::fflush(f.get()) != 0) throw StorageError("flush failed for " + path.string());
}

struct Decoded {
  Resolution res;
  int color_type = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;
};

Decoded read_impl(const std::filesystem::path& path, bool header_only) {
  File f = open(path, "rb");
  std::string err;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (png == nullptr) throw StorageError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  Decoded out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png read " + path.string() + ": " + err);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  out.res = {static_cast<int>(png_get_image_width(png, info)),
             static_cast<int>(png_get_image_height(png, info))};
  out.color_type = png_get_color_type(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  if (!header_only) {
    if (out.bit_depth == 16) png_set_swap(png);
    png_read_update_info(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    out.bytes.resize(stride * out.res.height);
    rows.resize(out.res.height);
    for (int y = 0; y < out.res.height; ++y) rows[y] = out.bytes.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void expect_layout(const Decoded& d, int color_type, int bit_depth,
                   const std::filesystem::path& path) {
  if (d.color_type != color_type || d.bit_depth != bit_depth) {
    throw FormatError("unexpected pixel layout in " + path.string());
  }
}

}  // namespace

std::vector<std::uint8_t> encode(const RgbImage& image) {
  return encode_impl(image.resolution(), PNG_COLOR_TYPE_RGB, 3, image.data().data());
}

std::vector<std::uint8_t> encode(const DepthImage& image) {
  return encode_impl(image.resolution(), PNG_COLOR_TYPE_GRAY, 1, image.data().data());
}

std::vector<std::uint8_t> encode(const Mask& mask) {
  return encode_impl(mask.resolution(), PNG_COLOR_TYPE_GRAY, 1, mask.bytes().data());
}

void write(const std::filesystem::path& path, const RgbImage& image) { write_file(path, encode(image)); }
void write(const std::filesystem::path& path, const DepthImage& image) { write_file(path, encode(image)); }
void write(const std::filesystem::path& path, const Mask& mask) { write_file(path, encode(mask)); }

RgbImage read_rgb(const std::filesystem::path& path) {
  Decoded d = read_impl(path, false);
  expect_layout(d, PNG_COLOR_TYPE_RGB, 8, path);
  return RgbImage(d.res, std::move(d.bytes));
}

DepthImage read_depth(const std::filesystem::path& path) {
  Decoded d = read_impl(path, false);
  expect_layout(d, PNG_COLOR_TYPE_GRAY, 16, path);
  std::vector<std::uint16_t> samples(d.res.pixels());
  std::memcpy(samples.data(), d.bytes.data(), samples.size() * sizeof(std::uint16_t));
  return DepthImage(d.res, std::move(samples));
}

Mask read_mask(const std::filesystem::path& path) {
  Decoded d = read_impl(path, false);
  expect_layout(d, PNG_COLOR_TYPE_GRAY, 8, path);
  Mask m(d.res);
  for (std::size_t i = 0; i < d.bytes.size(); ++i) {
    if (d.bytes[i] != 0) m.set_index(i);
  }
  return m;
}

Resolution read_size(const std::filesystem::path& path) {
  return read_impl(path, true).res;
}

}  // namespace seedtrack::png
