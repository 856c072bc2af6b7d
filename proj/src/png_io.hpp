// Copyright 2026 The HCEP Authors.
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

#ifndef HCEP_SRC_PNG_IO_HPP_
#define HCEP_SRC_PNG_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hcep::png {

/// 16-bit PNG raster; `channels` is 1 (gray) or 3 (RGB).
struct Image16 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint16_t> data;
};

void write16(const std::filesystem::path& path, const Image16& img);
Image16 read16(const std::filesystem::path& path);

/// CRC-32 of a whole file.
std::uint32_t file_crc32(const std::filesystem::path& path);

}  // namespace hcep::png

#endif  // HCEP_SRC_PNG_IO_HPP_
