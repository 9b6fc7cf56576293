// Copyright 2026 The ldikit Authors
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

#pragma once

#include <cstddef>
#include <functional>

namespace ldikit {

/// Worker count, re-read from the LDIKIT_THREADS environment variable on every
/// call so tests can flip it between runs. Unset/invalid falls back to
/// hardware concurrency.
int thread_count();

/// Runs fn(begin, end) over [0, n) split into fixed-size chunks.
///
/// The chunk layout depends only on n, never on the worker count, and every
/// invocation writes to disjoint output slots chosen by index. Outputs are
/// therefore bit-identical for any LDIKIT_THREADS value; reductions are the
/// caller's job and must be done in chunk order.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace ldikit
