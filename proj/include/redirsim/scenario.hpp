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

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "redirsim/model.hpp"
#include "redirsim/policy.hpp"

namespace redirsim {

struct SpawnStep {
    std::string actor;
    std::string package;
};

struct ForkStep {
    std::string actor;
    std::string child;
};

struct ExecStep {
    std::string actor;
    std::string path;
    std::vector<std::string> argv;
};

/// Kill by actor name, or by daemon role name ("logcat", "vold")
/// resolved in the caller's operative namespace.
struct KillStep {
    std::string actor;
    std::string target;
};

struct DataSpec {
    enum class Kind { None, Literal, FromLastRead, VoldProbe };

    Kind kind = Kind::None;
    std::string literal;
    int32_t vold_index = 0;
    std::string vold_exec;

    static DataSpec none() { return {}; }
    static DataSpec text(std::string t) {
        return {Kind::Literal, std::move(t), 0, {}};
    }
    static DataSpec last_read() { return {Kind::FromLastRead, {}, 0, {}}; }
    static DataSpec vold_probe(int32_t index, std::string exec) {
        return {Kind::VoldProbe, {}, index, std::move(exec)};
    }
};

struct SyscallStep {
    std::string actor;
    SyscallKind kind = SyscallKind::GetPid;
    std::optional<std::string> path;
    std::optional<std::string> service;
    std::optional<std::string> target;  // actor name, resolved at run time
    DataSpec data;
    std::optional<uint32_t> size;       // payload length override / segment size
    std::optional<std::string> segment;       // attach a named segment
    std::optional<std::string> save_segment;  // name the created segment
    bool writable = false;
};

/// Checks the routing decision of the immediately preceding syscall.
struct ExpectRouteStep {
    RouteKind kind = RouteKind::Host;
    std::optional<int> vmid;  // redirect target; default: the caller's container
    std::optional<DenyReason> reason;
};

struct AssertStep {
    std::string id;
    std::map<std::string, std::string> args;
};

using Step =
    std::variant<SpawnStep, ForkStep, ExecStep, KillStep, SyscallStep, ExpectRouteStep,
                 AssertStep>;

struct ScenarioTrace {
    std::string name;
    uint64_t seed = 0;
    std::vector<BindingSpec> bindings;
    std::vector<Step> steps;
};

/// Throws SimError{ConfigError} on malformed input.
ScenarioTrace trace_from_json_text(const std::string& text);
ScenarioTrace trace_from_file(const std::string& path);
std::string trace_to_json_text(const ScenarioTrace& trace);

}  // namespace redirsim
