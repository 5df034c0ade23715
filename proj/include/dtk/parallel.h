// Copyright 2026  The dtk Authors
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

#ifndef DTK_PARALLEL_H_
#define DTK_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace dtk {

// Thread count from DTK_NUM_THREADS, else hardware concurrency (min 1).
int default_thread_count();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunks never
// overlap, so bodies that only write their own slots need no locking.
// With num_threads <= 1 runs inline.
void parallel_for(std::size_t n, int num_threads,
                  const std::function<void(std::size_t, std::size_t)> &body);

}  // namespace dtk

#endif  // DTK_PARALLEL_H_
