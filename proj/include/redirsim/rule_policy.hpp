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

#include <memory>
#include <string>
#include <vector>

#include "redirsim/policy.hpp"

namespace redirsim {

/// One entry of an ordered rule table. Every present field must match
/// for the rule to fire; absent fields are wildcards.
struct RouteRule {
    std::vector<SyscallKind> kinds;        // empty: any kind
    std::optional<bool> app;               // uid >= 10000 or containerized
    std::optional<bool> host_caller;       // vmid == 0
    std::vector<std::string> path_under;   // canonical path under any listed root
    std::optional<bool> writable;
    std::vector<std::string> service_in;
    std::optional<bool> has_target_pid;

    enum class Action { Host, RedirectCaller, Deny };
    Action action = Action::Host;
    DenyReason deny_reason = DenyReason::PolicyDenied;

    bool matches(const ProcessDescriptor& caller, const SyscallDesc& call,
                 const std::string& canonical_path) const;
};

/// Routing driven by an ordered JSON rule table: first match wins.
/// Interprets the same decision space as BuiltinPolicy but shares no
/// code with it, so the two can check each other.
class RulePolicy final : public RoutePolicy {
public:
    /// Throws SimError{ConfigError} on malformed JSON or unknown fields.
    static RulePolicy from_json_text(const std::string& text);
    static RulePolicy from_file(const std::string& path);

    /// Table transcribing the default routing principles.
    static RulePolicy builtin_equivalent();

    RouteDecision route(const ProcessDescriptor& caller,
                        const SyscallDesc& call) const override;
    std::string_view name() const override { return name_; }

    size_t rule_count() const { return rules_.size(); }

private:
    RulePolicy() = default;

    std::string name_ = "rules";
    std::vector<RouteRule> rules_;
};

/// JSON source of the builtin-equivalent rule table.
const char* builtin_rules_json();

}  // namespace redirsim
