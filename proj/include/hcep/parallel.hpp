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

#ifndef HCEP_PARALLEL_HPP_
#define HCEP_PARALLEL_HPP_

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

namespace hcep {

/// Execution policy for the data-parallel kernels. Both policies produce
/// bit-identical results: parallel work writes per-item slots and every
/// reduction runs serially in index order afterwards.
enum class ExecPolicy { serial, parallel };

/// Worker count used by ExecPolicy::parallel (HCEP_THREADS caps it).
int worker_threads();
void set_worker_threads(int n);

/// Calls f(i) for i in [0, n). An exception from the lowest failing index
/// is rethrown after the loop.
template <typename F>
void for_each_index(std::size_t n, ExecPolicy policy, F&& f) {
  if (policy == ExecPolicy::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_threads())
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hcep

#endif  // HCEP_PARALLEL_HPP_
