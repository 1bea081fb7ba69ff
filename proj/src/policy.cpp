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

#include "redirsim/policy.hpp"

#include <algorithm>
#include <array>
#include <vector>

namespace redirsim {

namespace {

constexpr std::array<std::string_view, 3> kReadonlyRoots = {
    "/system",
    "/etc",
    "/data/app",
};

constexpr std::array<std::string_view, 2> kHostDevices = {
    "/dev/binder",
    "/dev/ashmem",
};

// Services that must observe real hardware state to be useful. Labels
// follow the service-manager names plus the interface buckets used in
// workload traces.
constexpr std::array<std::string_view, 6> kUiServices = {
    "android.ui",
    "android.view",
    "com.android.internal.view",
    "window",
    "input",
    "display",
};

constexpr std::array<std::string_view, 2> kNotificationServices = {
    "notification",
    "android.app.INotificationManager",
};

bool is_dangerous(SyscallKind kind) {
    return kind == SyscallKind::Insmod || kind == SyscallKind::Rmmod ||
           kind == SyscallKind::Shutdown;
}

bool is_app_caller(const ProcessDescriptor& caller) {
    return is_app_uid(caller.uid) || caller.vmid.is_container();
}

}  // namespace

const char* to_string(SyscallKind kind) {
    switch (kind) {
    case SyscallKind::FileOpen: return "file_open";
    case SyscallKind::FileRead: return "file_read";
    case SyscallKind::FileWrite: return "file_write";
    case SyscallKind::FileClose: return "file_close";
    case SyscallKind::FileUnlink: return "file_unlink";
    case SyscallKind::Mmap: return "mmap";
    case SyscallKind::Fork: return "fork";
    case SyscallKind::Clone: return "clone";
    case SyscallKind::Execve: return "execve";
    case SyscallKind::Kill: return "kill";
    case SyscallKind::GetPid: return "getpid";
    case SyscallKind::SocketOp: return "socket_op";
    case SyscallKind::NetlinkSend: return "netlink_send";
    case SyscallKind::BinderIoctl: return "binder_ioctl";
    case SyscallKind::AshmemIoctl: return "ashmem_ioctl";
    case SyscallKind::DeviceIoctl: return "device_ioctl";
    case SyscallKind::Insmod: return "insmod";
    case SyscallKind::Rmmod: return "rmmod";
    case SyscallKind::Shutdown: return "shutdown";
    }
    return "unknown";
}

std::optional<SyscallKind> syscall_kind_from_string(std::string_view name) {
    for (uint8_t i = 0; i < kSyscallKindCount; ++i) {
        auto kind = static_cast<SyscallKind>(i);
        if (name == to_string(kind)) return kind;
    }
    return std::nullopt;
}

const char* to_string(DenyReason reason) {
    switch (reason) {
    case DenyReason::DangerousCall: return "dangerous_call";
    case DenyReason::UnsupportedMmap: return "unsupported_mmap";
    case DenyReason::PolicyDenied: return "policy";
    }
    return "unknown";
}

const char* to_string(IoctlCategory category) {
    switch (category) {
    case IoctlCategory::Ui: return "ui";
    case IoctlCategory::NotificationManager: return "notification_manager";
    case IoctlCategory::SystemService: return "system_service";
    case IoctlCategory::AppToApp: return "app_to_app";
    }
    return "unknown";
}

std::string RouteDecision::str() const {
    switch (kind) {
    case RouteKind::Host: return "host";
    case RouteKind::Redirect: return "redirect:" + std::to_string(vmid.value());
    case RouteKind::Deny: return std::string("deny:") + to_string(reason);
    }
    return "unknown";
}

std::string canonicalize_path(std::string_view path) {
    std::vector<std::string_view> parts;
    size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') ++i;
        size_t start = i;
        while (i < path.size() && path[i] != '/') ++i;
        std::string_view part = path.substr(start, i - start);
        if (part.empty() || part == ".") continue;
        if (part == "..") {
            if (!parts.empty()) parts.pop_back();
            continue;
        }
        parts.push_back(part);
    }
    if (parts.empty()) return "/";
    std::string out;
    for (auto part : parts) {
        out += '/';
        out += part;
    }
    return out;
}

bool path_under(std::string_view path, std::string_view root) {
    if (root == "/") return !path.empty() && path.front() == '/';
    if (path == root) return true;
    return path.size() > root.size() && path.substr(0, root.size()) == root &&
           path[root.size()] == '/';
}

bool in_readonly_region(std::string_view canonical_path) {
    return std::any_of(kReadonlyRoots.begin(), kReadonlyRoots.end(),
                       [&](std::string_view root) { return path_under(canonical_path, root); });
}

Placement classify_path(std::string_view canonical_path, PathAccess access) {
    if (access == PathAccess::Write) return Placement::Container;
    return in_readonly_region(canonical_path) ? Placement::Host : Placement::Container;
}

Placement classify_device(std::string_view canonical_dev_path) {
    for (auto dev : kHostDevices) {
        if (path_under(canonical_dev_path, dev)) return Placement::Host;
    }
    return Placement::Container;
}

bool is_ui_service(std::string_view service) {
    return std::find(kUiServices.begin(), kUiServices.end(), service) != kUiServices.end();
}

bool is_notification_service(std::string_view service) {
    return std::find(kNotificationServices.begin(), kNotificationServices.end(), service) !=
           kNotificationServices.end();
}

BinderClassification classify_binder_ioctl(const ProcessDescriptor& caller,
                                           const SyscallDesc& call) {
    BinderClassification out;
    if (call.target_pid.has_value()) {
        // Intent addressed to another app. The host delivers it even
        // when sender and receiver live in different containers.
        out.category = IoctlCategory::AppToApp;
        out.decision = RouteDecision::host();
        return out;
    }
    std::string_view service =
        call.ioctl_service ? std::string_view(*call.ioctl_service) : std::string_view();
    if (is_ui_service(service)) {
        out.category = IoctlCategory::Ui;
        out.decision = RouteDecision::host();
        return out;
    }
    if (is_notification_service(service)) {
        out.category = IoctlCategory::NotificationManager;
        out.decision = RouteDecision::host();
        return out;
    }
    out.category = IoctlCategory::SystemService;
    out.decision = caller.vmid.is_host() ? RouteDecision::host()
                                         : RouteDecision::redirect(caller.vmid);
    return out;
}

ShareCheck check_segment_share(const MemorySegment& segment,
                               const ProcessDescriptor& recipient) {
    if (recipient.vmid.is_host()) return ShareCheck::Allowed;
    for (const auto& [pid, vmid] : segment.mapped_by) {
        if (vmid.is_container() && vmid != recipient.vmid) return ShareCheck::Denied;
    }
    return ShareCheck::Allowed;
}

RouteDecision route_mmap(const ProcessDescriptor& caller,
                         std::string_view canonical_path, bool writable) {
    if (caller.vmid.is_host()) return RouteDecision::host();
    if (path_under(canonical_path, "/dev/ashmem")) return RouteDecision::host();
    if (writable) return RouteDecision::deny(DenyReason::UnsupportedMmap);
    if (in_readonly_region(canonical_path)) return RouteDecision::host();
    // A read-only mapping of container-private data would still need a
    // cross-boundary page table, which the engine does not model.
    return RouteDecision::deny(DenyReason::UnsupportedMmap);
}

void validate_call(const SyscallDesc& call) {
    auto need_path = [&] {
        if (!call.path || call.path->empty()) {
            throw SimError(ErrorCode::MalformedCall,
                           std::string(to_string(call.kind)) + " requires a path");
        }
    };
    switch (call.kind) {
    case SyscallKind::FileOpen:
    case SyscallKind::FileRead:
    case SyscallKind::FileWrite:
    case SyscallKind::FileClose:
    case SyscallKind::FileUnlink:
    case SyscallKind::Mmap:
    case SyscallKind::Execve:
    case SyscallKind::DeviceIoctl:
        need_path();
        break;
    case SyscallKind::BinderIoctl:
        if ((!call.ioctl_service || call.ioctl_service->empty()) && !call.target_pid) {
            throw SimError(ErrorCode::MalformedCall,
                           "binder_ioctl requires a service name or a target pid");
        }
        break;
    case SyscallKind::Kill:
        if (!call.target_pid) {
            throw SimError(ErrorCode::MalformedCall, "kill requires a target pid");
        }
        break;
    default:
        break;
    }
}

RouteDecision BuiltinPolicy::route(const ProcessDescriptor& caller,
                                   const SyscallDesc& call) const {
    validate_call(call);

    if (is_dangerous(call.kind)) {
        if (is_app_caller(caller)) return RouteDecision::deny(DenyReason::DangerousCall);
        return RouteDecision::host();
    }
    // Trusted host processes run everything locally, as on a stock system.
    if (caller.vmid.is_host()) return RouteDecision::host();

    const Vmid vmid = caller.vmid;
    const std::string path = call.path ? canonicalize_path(*call.path) : std::string();

    switch (call.kind) {
    case SyscallKind::Mmap:
        return route_mmap(caller, path, call.writable);

    case SyscallKind::FileWrite:
    case SyscallKind::FileUnlink:
        if (path_under(path, "/dev")) {
            return classify_device(path) == Placement::Host ? RouteDecision::host()
                                                            : RouteDecision::redirect(vmid);
        }
        return RouteDecision::redirect(vmid);

    case SyscallKind::FileOpen:
        if (path_under(path, "/dev")) {
            return classify_device(path) == Placement::Host ? RouteDecision::host()
                                                            : RouteDecision::redirect(vmid);
        }
        if (call.writable) return RouteDecision::redirect(vmid);
        return in_readonly_region(path) ? RouteDecision::host() : RouteDecision::redirect(vmid);

    case SyscallKind::FileRead:
    case SyscallKind::FileClose:
    case SyscallKind::DeviceIoctl:
        if (path_under(path, "/dev")) {
            return classify_device(path) == Placement::Host ? RouteDecision::host()
                                                            : RouteDecision::redirect(vmid);
        }
        return in_readonly_region(path) ? RouteDecision::host() : RouteDecision::redirect(vmid);

    // Process lifecycle stays under host kernel control: forks clone the
    // proxy, execve stages through the host exec cache, kill reaps the
    // proxy alongside the app.
    case SyscallKind::Fork:
    case SyscallKind::Clone:
    case SyscallKind::Execve:
    case SyscallKind::Kill:
    case SyscallKind::GetPid:
    case SyscallKind::AshmemIoctl:
        return RouteDecision::host();

    case SyscallKind::BinderIoctl:
        return classify_binder_ioctl(caller, call).decision;

    case SyscallKind::SocketOp:
    case SyscallKind::NetlinkSend:
        return RouteDecision::redirect(vmid);

    default:
        return RouteDecision::redirect(vmid);
    }
}

RouteDecision PassthroughPolicy::route(const ProcessDescriptor& caller,
                                       const SyscallDesc& call) const {
    (void)caller;
    validate_call(call);
    return RouteDecision::host();
}

}  // namespace redirsim
