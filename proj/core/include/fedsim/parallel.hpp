/*
 * Copyright 2026 The fedsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <functional>

namespace fedsim {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once and bodies must not share mutable state except
/// through their own index slot, so results do not depend on the worker
/// count. The first exception thrown by any body is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace fedsim
