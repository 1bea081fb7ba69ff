/*
 * Copyright (C) 2026 The redirsim Authors
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

#include <optional>
#include <string>
#include <vector>

#include "redirsim/scenario.hpp"

namespace redirsim {

/// Replay of the classic volume-daemon root exploit: the app copies
/// itself out of /proc, finds the daemon over netlink/procfs, captures
/// crash logs, brute-forces the negative index, and gets its copy
/// executed as root. The final assertions check that every destructive
/// effect stays inside the attacker's own container.
ScenarioTrace builtin_gingerbreak();

/// Small demo trace: one app writing and reading its private data.
ScenarioTrace builtin_smoke();

std::vector<std::string> builtin_scenario_names();
std::optional<ScenarioTrace> builtin_scenario(const std::string& name);

}  // namespace redirsim
