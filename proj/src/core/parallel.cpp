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

#include "nowfuse/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace nowfuse {

std::size_t worker_count() {
  if (const char* env = std::getenv("NOWFUSE_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (...) {
      // fall through to the hardware default
    }
  }
  // hardware_concurrency() reads sysfs on glibc, so ask once.
  static const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  return hw;
}

}  // namespace nowfuse
