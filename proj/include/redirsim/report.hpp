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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "redirsim/transport.hpp"

namespace redirsim {

constexpr int kReportSchema = 1;

struct StepOutcome {
    int index = 0;
    std::string op;
    std::string actor;
    std::optional<std::string> route;            // decision of a syscall step
    std::optional<std::string> binder_category;  // binder syscalls only
    int64_t retval = 0;
    int sim_errno = 0;
    std::string note;
};

struct AssertionOutcome {
    std::string id;
    bool pass = false;
    std::string detail;
};

/// Full result of one scenario run. Serialization is byte-stable for a
/// given trace, seed, policy, and wait mode; it contains no clocks.
struct ScenarioReport {
    std::string name;
    uint64_t seed = 0;
    std::string policy;
    std::string wait_mode;
    int threads = 1;

    std::vector<StepOutcome> steps;
    SwitchCounter counters;
    std::map<std::string, std::map<std::string, uint64_t>> routes_by_kind;
    std::map<std::string, uint64_t> binder_categories;
    std::vector<AssertionOutcome> assertions;

    std::string host_ro_digest;
    std::string host_rw_digest;
    std::map<int, std::string> container_digests;

    bool all_assertions_passed() const;
    size_t failed_assertions() const;

    std::string to_json_text() const;  // pretty-printed, trailing newline
};

}  // namespace redirsim
