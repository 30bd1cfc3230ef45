// Copyright 2026 The nowfuse Authors
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

#include "nowfuse/io.hpp"

#include <png.h>
#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

namespace nowfuse {

namespace {

constexpr char kMagic[4] = {'N', 'F', 'G', '1'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

Grid Field::channel(std::uint32_t c) const {
  require(c < channels, ErrorCode::kInvalidArgument, "channel index out of range");
  const std::size_t n = static_cast<std::size_t>(height) * width;
  std::vector<float> v(data.begin() + c * n, data.begin() + (c + 1) * n);
  return Grid(static_cast<int>(height), static_cast<int>(width), std::move(v));
}

Field to_field(const Grid& g) {
  Field f;
  f.height = static_cast<std::uint32_t>(g.height());
  f.width = static_cast<std::uint32_t>(g.width());
  f.channels = 1;
  f.data.assign(g.values().begin(), g.values().end());
  return f;
}

Field to_field(const FlowField& flow) {
  Field f = to_field(flow.dx());
  f.channels = 2;
  f.data.insert(f.data.end(), flow.dy().values().begin(), flow.dy().values().end());
  return f;
}

std::vector<std::uint8_t> encode_field(const Field& f) {
  require(f.data.size() == static_cast<std::size_t>(f.height) * f.width * f.channels,
          ErrorCode::kDimensionMismatch, "field payload does not match header");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * f.data.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, f.height);
  put_u32(out, f.width);
  put_u32(out, f.channels);
  for (float v : f.data) {
    require(std::isfinite(v), ErrorCode::kNonFinite, "non-finite value in field payload");
    put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Field decode_field(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0,
          ErrorCode::kFormat, "bad magic: not an NFG1 file");
  require(bytes.size() >= kHeaderBytes, ErrorCode::kFormat, "truncated NFG1 header");
  Field f;
  f.height = get_u32(bytes.data() + 4);
  f.width = get_u32(bytes.data() + 8);
  f.channels = get_u32(bytes.data() + 12);
  require(f.height >= 1 && f.width >= 1 && f.channels >= 1, ErrorCode::kFormat,
          "NFG1 header has a zero dimension");
  const std::uint64_t count =
      static_cast<std::uint64_t>(f.height) * f.width * f.channels;
  require(bytes.size() - kHeaderBytes == 4 * count, ErrorCode::kFormat,
          "NFG1 payload length " + std::to_string(bytes.size() - kHeaderBytes) +
              " does not match dimensions (expected " + std::to_string(4 * count) + ")");
  f.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const float v = std::bit_cast<float>(get_u32(bytes.data() + kHeaderBytes + 4 * i));
    require(std::isfinite(v), ErrorCode::kNonFinite, "non-finite value in NFG1 payload");
    f.data[i] = v;
  }
  return f;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes) {
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot rename into " + path.string());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

Field read_field(const std::filesystem::path& path) {
  try {
    return decode_field(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_field(const Field& f, const std::filesystem::path& path) {
  write_file_atomic(path, encode_field(f));
}

Grid read_grid(const std::filesystem::path& path) {
  const Field f = read_field(path);
  require(f.channels == 1, ErrorCode::kFormat,
          path.string() + ": expected 1 channel, found " + std::to_string(f.channels));
  return f.channel(0);
}

void write_grid(const Grid& g, const std::filesystem::path& path) {
  write_field(to_field(g), path);
}

FlowField read_flow(const std::filesystem::path& path) {
  const Field f = read_field(path);
  require(f.channels == 2, ErrorCode::kFormat,
          path.string() + ": flow files have 2 channels, found " +
              std::to_string(f.channels));
  return FlowField(f.channel(0), f.channel(1));
}

void write_flow(const FlowField& f, const std::filesystem::path& path) {
  write_field(to_field(f), path);
}

std::vector<std::uint8_t> to_gray8(const Grid& g) {
  std::vector<std::uint8_t> px(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = std::min(1.0, std::max(0.0, static_cast<double>(g[i])));
    px[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
  }
  return px;
}

void write_png(const Grid& g, const std::filesystem::path& path) {
  const auto px = to_gray8(g);
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(tmp.c_str(), "wb"), &std::fclose);
  require(fp != nullptr, ErrorCode::kIo, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIo, "libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(g.width()),
               static_cast<png_uint_32>(g.height()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < g.height(); ++y)
    png_write_row(png, px.data() + static_cast<std::size_t>(y) * g.width());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  fp.reset();
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCode::kIo, "cannot rename into " + path.string());
}

}  // namespace nowfuse
