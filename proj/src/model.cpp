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

#include "redirsim/model.hpp"

namespace redirsim {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ContainersExhausted: return "ContainersExhausted";
    case ErrorCode::BadHandle: return "BadHandle";
    case ErrorCode::ProxyDead: return "ProxyDead";
    case ErrorCode::NoSuchProcess: return "NoSuchProcess";
    case ErrorCode::NoSuchBinary: return "NoSuchBinary";
    case ErrorCode::CacheViolation: return "CacheViolation";
    case ErrorCode::MalformedCall: return "MalformedCall";
    case ErrorCode::ScenarioError: return "ScenarioError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ContainerBootFailure: return "ContainerBootFailure";
    }
    return "UnknownError";
}

Vmid Vmid::of(int raw) {
    if (raw < kHostValue || raw > kMaxValue) {
        throw SimError(ErrorCode::OutOfRange,
                       "vmid " + std::to_string(raw) + " outside [0, 255]");
    }
    return Vmid(static_cast<uint8_t>(raw));
}

std::optional<Vmid> Vmid::checked(int raw) {
    if (raw < kHostValue || raw > kMaxValue) return std::nullopt;
    return Vmid(static_cast<uint8_t>(raw));
}

const char* to_string(WaitMode mode) {
    return mode == WaitMode::KernelSleep ? "kernel" : "naive";
}

std::optional<WaitMode> wait_mode_from_string(const std::string& name) {
    if (name == "kernel") return WaitMode::KernelSleep;
    if (name == "naive") return WaitMode::NaiveUserspace;
    return std::nullopt;
}

AppBinding BindingTable::bind(const std::string& package, Uid uid) {
    if (auto existing = find_package(package)) return *existing;

    Vmid vmid;
    auto it = uid_to_vmid_.find(uid);
    if (it != uid_to_vmid_.end()) {
        vmid = it->second;
    } else {
        if (next_vmid_ > Vmid::kMaxValue) {
            throw SimError(ErrorCode::ContainersExhausted,
                           "no container slot left for uid " + std::to_string(uid));
        }
        vmid = Vmid::of(next_vmid_++);
        uid_to_vmid_.emplace(uid, vmid);
    }
    AppBinding binding{package, uid, vmid};
    bindings_.push_back(binding);
    return binding;
}

AppBinding BindingTable::bind_trusted(const std::string& package, Uid uid) {
    if (auto existing = find_package(package)) return *existing;

    Vmid vmid = Vmid::host();
    auto it = uid_to_vmid_.find(uid);
    if (it != uid_to_vmid_.end()) {
        vmid = it->second;
    } else {
        uid_to_vmid_.emplace(uid, vmid);
        ++trusted_uids_;
    }
    AppBinding binding{package, uid, vmid};
    bindings_.push_back(binding);
    return binding;
}

std::optional<AppBinding> BindingTable::find_package(const std::string& package) const {
    for (const auto& b : bindings_) {
        if (b.package == package) return b;
    }
    return std::nullopt;
}

std::optional<Vmid> BindingTable::vmid_for_uid(Uid uid) const {
    auto it = uid_to_vmid_.find(uid);
    if (it == uid_to_vmid_.end()) return std::nullopt;
    return it->second;
}

void validate_container_config(const ContainerConfig& config) {
    if (config.memory_mb < kMinGuestMemoryMb) {
        throw SimError(ErrorCode::ConfigError,
                       "guest memory " + std::to_string(config.memory_mb) +
                           " MB below minimum " + std::to_string(kMinGuestMemoryMb) + " MB");
    }
}

}  // namespace redirsim
