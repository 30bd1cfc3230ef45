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

#ifndef NOWFUSE_IO_HPP_
#define NOWFUSE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nowfuse/grid.hpp"

namespace nowfuse {

// Multi-channel payload of an NFG1 file: channels x height x width floats,
// channel-major, row-major within a channel.
struct Field {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;

  Grid channel(std::uint32_t c) const;
};

Field to_field(const Grid& g);
Field to_field(const FlowField& f);

// NFG1: "NFG1", u32 LE height, width, channels, then LE float32 payload.
std::vector<std::uint8_t> encode_field(const Field& f);
Field decode_field(const std::vector<std::uint8_t>& bytes);

Field read_field(const std::filesystem::path& path);
void write_field(const Field& f, const std::filesystem::path& path);

Grid read_grid(const std::filesystem::path& path);
void write_grid(const Grid& g, const std::filesystem::path& path);
FlowField read_flow(const std::filesystem::path& path);
void write_flow(const FlowField& f, const std::filesystem::path& path);

// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// 8-bit grayscale PNG, v -> round(255 * clamp01(v)).
void write_png(const Grid& g, const std::filesystem::path& path);
std::vector<std::uint8_t> to_gray8(const Grid& g);

}  // namespace nowfuse

#endif  // NOWFUSE_IO_HPP_
