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
#include <optional>
#include <string>
#include <string_view>

#include "redirsim/model.hpp"

namespace redirsim {

// Wire-stable syscall tags. Values are part of the marshalling format;
// append only.
enum class SyscallKind : uint8_t {
    FileOpen = 0,
    FileRead = 1,
    FileWrite = 2,
    FileClose = 3,
    FileUnlink = 4,
    Mmap = 5,
    Fork = 6,
    Clone = 7,
    Execve = 8,
    Kill = 9,
    GetPid = 10,
    SocketOp = 11,
    NetlinkSend = 12,
    BinderIoctl = 13,
    AshmemIoctl = 14,
    DeviceIoctl = 15,
    Insmod = 16,
    Rmmod = 17,
    Shutdown = 18,
};

constexpr uint8_t kSyscallKindCount = 19;

const char* to_string(SyscallKind kind);
std::optional<SyscallKind> syscall_kind_from_string(std::string_view name);

/// Normalized description of one issued syscall. `writable` carries
/// open/mmap write intent, which the kind alone does not encode.
struct SyscallDesc {
    SyscallKind kind = SyscallKind::GetPid;
    std::optional<std::string> path;
    std::optional<Pid> target_pid;
    std::optional<std::string> ioctl_service;
    uint32_t payload_len = 0;
    bool writable = false;

    bool operator==(const SyscallDesc&) const = default;
};

enum class RouteKind : uint8_t { Host, Redirect, Deny };

enum class DenyReason : uint8_t {
    DangerousCall,    // insmod / rmmod / shutdown from an app
    UnsupportedMmap,  // writable file mapping, not modeled
    PolicyDenied,     // rule-file deny
};

const char* to_string(DenyReason reason);

struct RouteDecision {
    RouteKind kind = RouteKind::Host;
    Vmid vmid;                                        // meaningful when kind == Redirect
    DenyReason reason = DenyReason::PolicyDenied;     // meaningful when kind == Deny

    static RouteDecision host() { return {RouteKind::Host, Vmid::host(), DenyReason::PolicyDenied}; }
    static RouteDecision redirect(Vmid vmid) { return {RouteKind::Redirect, vmid, DenyReason::PolicyDenied}; }
    static RouteDecision deny(DenyReason reason) { return {RouteKind::Deny, Vmid::host(), reason}; }

    bool operator==(const RouteDecision& other) const {
        if (kind != other.kind) return false;
        if (kind == RouteKind::Redirect) return vmid == other.vmid;
        if (kind == RouteKind::Deny) return reason == other.reason;
        return true;
    }

    std::string str() const;
};

enum class IoctlCategory : uint8_t {
    Ui,                   // display, input, view hierarchy
    NotificationManager,  // user-visible notifications
    SystemService,        // everything else behind the service manager
    AppToApp,             // intents addressed to another app process
};

const char* to_string(IoctlCategory category);

enum class PathAccess { Read, Write };
enum class Placement { Host, Container };

/// Lexical path normalization: collapses "//", ".", ".."; result is
/// absolute. Does not consult any filesystem.
std::string canonicalize_path(std::string_view path);

/// True when `path` equals `root` or lies underneath it.
bool path_under(std::string_view path, std::string_view root);

/// Read-only OS regions served from the host image: system partition,
/// configuration, and installed app packages.
bool in_readonly_region(std::string_view canonical_path);

Placement classify_path(std::string_view canonical_path, PathAccess access);

/// Placement for device nodes. Binder and ashmem are the only devices
/// kept on the host; the rest map to the container's virtual devices.
Placement classify_device(std::string_view canonical_dev_path);

struct BinderClassification {
    IoctlCategory category = IoctlCategory::SystemService;
    RouteDecision decision = RouteDecision::host();
};

/// Categorizes a binder transaction and picks its route. UI and
/// notification services stay on the host; app-to-app intents are
/// delivered by the host; remaining system services run in the
/// caller's container.
BinderClassification classify_binder_ioctl(const ProcessDescriptor& caller,
                                           const SyscallDesc& call);

bool is_ui_service(std::string_view service);
bool is_notification_service(std::string_view service);

enum class ShareCheck { Allowed, Denied };

/// A segment may be shared into the host or into exactly one
/// container: every container-side mapper must carry the same vmid.
ShareCheck check_segment_share(const MemorySegment& segment,
                               const ProcessDescriptor& recipient);

RouteDecision route_mmap(const ProcessDescriptor& caller,
                         std::string_view canonical_path, bool writable);

/// Throws SimError{MalformedCall} when a field required by the kind is
/// missing (path for file ops, service name for binder ioctls).
void validate_call(const SyscallDesc& call);

class RoutePolicy {
public:
    virtual ~RoutePolicy() = default;

    /// Pure decision: depends only on the caller's (vmid, uid) and the
    /// call description.
    virtual RouteDecision route(const ProcessDescriptor& caller,
                                const SyscallDesc& call) const = 0;

    virtual std::string_view name() const = 0;
};

/// Default routing table. Read-only OS paths and the two host devices
/// stay on the host; writes and everything else follow the caller into
/// its container; module loading and shutdown are denied to apps.
class BuiltinPolicy final : public RoutePolicy {
public:
    RouteDecision route(const ProcessDescriptor& caller,
                        const SyscallDesc& call) const override;
    std::string_view name() const override { return "builtin"; }
};

/// Control policy: every call executes on the host, as on a stock
/// system. Used as the negative control for confinement scenarios.
class PassthroughPolicy final : public RoutePolicy {
public:
    RouteDecision route(const ProcessDescriptor& caller,
                        const SyscallDesc& call) const override;
    std::string_view name() const override { return "passthrough"; }
};

}  // namespace redirsim
