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

#include "redirsim/rule_policy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace redirsim {

namespace {

using nlohmann::json;

RouteRule::Action action_from_string(const std::string& text, DenyReason* reason) {
    if (text == "host") return RouteRule::Action::Host;
    if (text == "redirect") return RouteRule::Action::RedirectCaller;
    if (text == "deny" || text == "deny:policy") {
        *reason = DenyReason::PolicyDenied;
        return RouteRule::Action::Deny;
    }
    if (text == "deny:dangerous_call") {
        *reason = DenyReason::DangerousCall;
        return RouteRule::Action::Deny;
    }
    if (text == "deny:unsupported_mmap") {
        *reason = DenyReason::UnsupportedMmap;
        return RouteRule::Action::Deny;
    }
    throw SimError(ErrorCode::ConfigError, "unknown rule decision: " + text);
}

RouteRule parse_rule(const json& entry) {
    if (!entry.is_object() || !entry.contains("match") || !entry.contains("decision")) {
        throw SimError(ErrorCode::ConfigError, "rule needs 'match' and 'decision'");
    }
    RouteRule rule;
    const json& match = entry.at("match");
    if (!match.is_object()) {
        throw SimError(ErrorCode::ConfigError, "'match' must be an object");
    }
    for (const auto& [key, value] : match.items()) {
        if (key == "kinds") {
            for (const auto& name : value) {
                auto kind = syscall_kind_from_string(name.get<std::string>());
                if (!kind) {
                    throw SimError(ErrorCode::ConfigError,
                                   "unknown syscall kind: " + name.get<std::string>());
                }
                rule.kinds.push_back(*kind);
            }
        } else if (key == "app") {
            rule.app = value.get<bool>();
        } else if (key == "vmid") {
            std::string v = value.get<std::string>();
            if (v == "host") rule.host_caller = true;
            else if (v == "container") rule.host_caller = false;
            else throw SimError(ErrorCode::ConfigError, "vmid match must be host|container");
        } else if (key == "path_under") {
            for (const auto& root : value) {
                rule.path_under.push_back(canonicalize_path(root.get<std::string>()));
            }
        } else if (key == "writable") {
            rule.writable = value.get<bool>();
        } else if (key == "service_in") {
            for (const auto& svc : value) rule.service_in.push_back(svc.get<std::string>());
        } else if (key == "has_target_pid") {
            rule.has_target_pid = value.get<bool>();
        } else {
            throw SimError(ErrorCode::ConfigError, "unknown match field: " + key);
        }
    }
    rule.action = action_from_string(entry.at("decision").get<std::string>(), &rule.deny_reason);
    return rule;
}

}  // namespace

bool RouteRule::matches(const ProcessDescriptor& caller, const SyscallDesc& call,
                        const std::string& canonical_path) const {
    if (!kinds.empty() &&
        std::find(kinds.begin(), kinds.end(), call.kind) == kinds.end()) {
        return false;
    }
    if (app.has_value()) {
        bool caller_is_app = is_app_uid(caller.uid) || caller.vmid.is_container();
        if (caller_is_app != *app) return false;
    }
    if (host_caller.has_value() && caller.vmid.is_host() != *host_caller) return false;
    if (!path_under.empty()) {
        if (canonical_path.empty()) return false;
        bool hit = std::any_of(path_under.begin(), path_under.end(),
                               [&](const std::string& root) {
                                   return redirsim::path_under(canonical_path, root);
                               });
        if (!hit) return false;
    }
    if (writable.has_value() && call.writable != *writable) return false;
    if (!service_in.empty()) {
        if (!call.ioctl_service) return false;
        if (std::find(service_in.begin(), service_in.end(), *call.ioctl_service) ==
            service_in.end()) {
            return false;
        }
    }
    if (has_target_pid.has_value() && call.target_pid.has_value() != *has_target_pid) {
        return false;
    }
    return true;
}

RulePolicy RulePolicy::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SimError(ErrorCode::ConfigError, std::string("rule file parse: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("rules") || !doc.at("rules").is_array()) {
        throw SimError(ErrorCode::ConfigError, "rule file needs a top-level 'rules' array");
    }
    if (doc.value("schema", 1) != 1) {
        throw SimError(ErrorCode::ConfigError, "unsupported rule file schema");
    }
    RulePolicy policy;
    if (doc.contains("name")) policy.name_ = doc.at("name").get<std::string>();
    try {
        for (const auto& entry : doc.at("rules")) policy.rules_.push_back(parse_rule(entry));
    } catch (const json::exception& e) {
        throw SimError(ErrorCode::ConfigError, std::string("rule file field: ") + e.what());
    }
    if (policy.rules_.empty()) {
        throw SimError(ErrorCode::ConfigError, "rule table is empty");
    }
    return policy;
}

RulePolicy RulePolicy::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw SimError(ErrorCode::ConfigError, "cannot open rule file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

RulePolicy RulePolicy::builtin_equivalent() {
    RulePolicy policy = from_json_text(builtin_rules_json());
    policy.name_ = "builtin-rules";
    return policy;
}

RouteDecision RulePolicy::route(const ProcessDescriptor& caller,
                                const SyscallDesc& call) const {
    validate_call(call);
    const std::string path = call.path ? canonicalize_path(*call.path) : std::string();
    for (const auto& rule : rules_) {
        if (!rule.matches(caller, call, path)) continue;
        switch (rule.action) {
        case RouteRule::Action::Host:
            return RouteDecision::host();
        case RouteRule::Action::RedirectCaller:
            // Redirecting a host caller to "its container" degenerates
            // to local execution.
            return caller.vmid.is_host() ? RouteDecision::host()
                                         : RouteDecision::redirect(caller.vmid);
        case RouteRule::Action::Deny:
            return RouteDecision::deny(rule.deny_reason);
        }
    }
    throw SimError(ErrorCode::ConfigError, "rule table is not total for " +
                                               std::string(to_string(call.kind)));
}

const char* builtin_rules_json() {
    return R"JSON({
  "schema": 1,
  "name": "builtin-rules",
  "rules": [
    {"match": {"kinds": ["insmod", "rmmod", "shutdown"], "app": true},
     "decision": "deny:dangerous_call"},
    {"match": {"vmid": "host"}, "decision": "host"},
    {"match": {"kinds": ["mmap"], "path_under": ["/dev/ashmem"]}, "decision": "host"},
    {"match": {"kinds": ["mmap"], "writable": true}, "decision": "deny:unsupported_mmap"},
    {"match": {"kinds": ["mmap"], "path_under": ["/system", "/etc", "/data/app"]},
     "decision": "host"},
    {"match": {"kinds": ["mmap"]}, "decision": "deny:unsupported_mmap"},
    {"match": {"kinds": ["file_open", "file_read", "file_write", "file_close",
                          "file_unlink", "device_ioctl"],
               "path_under": ["/dev/binder", "/dev/ashmem"]},
     "decision": "host"},
    {"match": {"kinds": ["file_open", "file_read", "file_write", "file_close",
                          "file_unlink", "device_ioctl"],
               "path_under": ["/dev"]},
     "decision": "redirect"},
    {"match": {"kinds": ["file_write", "file_unlink"]}, "decision": "redirect"},
    {"match": {"kinds": ["file_open"], "writable": true}, "decision": "redirect"},
    {"match": {"kinds": ["file_open", "file_read", "file_close", "device_ioctl"],
               "path_under": ["/system", "/etc", "/data/app"]},
     "decision": "host"},
    {"match": {"kinds": ["file_open", "file_read", "file_close", "device_ioctl"]},
     "decision": "redirect"},
    {"match": {"kinds": ["fork", "clone", "execve", "kill", "getpid", "ashmem_ioctl"]},
     "decision": "host"},
    {"match": {"kinds": ["binder_ioctl"], "has_target_pid": true}, "decision": "host"},
    {"match": {"kinds": ["binder_ioctl"],
               "service_in": ["android.ui", "android.view", "com.android.internal.view",
                               "window", "input", "display",
                               "notification", "android.app.INotificationManager"]},
     "decision": "host"},
    {"match": {"kinds": ["binder_ioctl"]}, "decision": "redirect"},
    {"match": {}, "decision": "redirect"}
  ]
})JSON";
}

}  // namespace redirsim
