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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace redirsim {

enum class ErrorCode {
    OutOfRange,
    ContainersExhausted,
    BadHandle,
    ProxyDead,
    NoSuchProcess,
    NoSuchBinary,
    CacheViolation,
    MalformedCall,
    ScenarioError,
    ConfigError,
    ContainerBootFailure,
};

/// Error for engine-level misuse and exhaustion. Simulated syscall
/// failures (ENOENT and friends) are plain errno values in results,
/// not exceptions.
class SimError : public std::runtime_error {
public:
    SimError(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

const char* to_string(ErrorCode code);

/// One-byte container identifier. 0 is the trusted host; 1..255 index
/// containers. Stored in every process descriptor.
class Vmid {
public:
    static constexpr int kHostValue = 0;
    static constexpr int kMaxValue = 255;

    constexpr Vmid() = default;

    /// Throws SimError{OutOfRange} unless 0 <= raw <= 255.
    static Vmid of(int raw);
    static std::optional<Vmid> checked(int raw);
    static constexpr Vmid host() { return Vmid(); }

    constexpr uint8_t value() const { return value_; }
    constexpr bool is_host() const { return value_ == 0; }
    constexpr bool is_container() const { return value_ != 0; }

    auto operator<=>(const Vmid&) const = default;

private:
    explicit constexpr Vmid(uint8_t value) : value_(value) {}

    uint8_t value_ = 0;
};

using Pid = int32_t;
using Uid = int32_t;

/// First UID assigned to installed applications (Android convention,
/// documented but not enforced on bindings).
constexpr Uid kFirstAppUid = 10000;

inline bool is_app_uid(Uid uid) { return uid >= kFirstAppUid; }

enum class WaitMode {
    KernelSleep,     // proxy parks in an interruptible kernel-space wait
    NaiveUserspace,  // proxy polls from userspace; two extra context switches
};

const char* to_string(WaitMode mode);
std::optional<WaitMode> wait_mode_from_string(const std::string& name);

enum class ProcOrigin { Boot, Scenario };

/// Host-visible handle to a resource that physically lives inside a
/// container (opened there by the proxy).
struct RemoteHandle {
    int host_fd = -1;
    int container_fd = -1;
    Pid owner_pid = 0;
    Vmid vmid;

    bool operator==(const RemoteHandle&) const = default;
};

/// Open file served by the host kernel directly.
struct LocalOpen {
    std::string path;
    bool writable = false;

    bool operator==(const LocalOpen&) const = default;
};

using FdEntry = std::variant<LocalOpen, RemoteHandle>;

/// Host-side process descriptor. The vmid byte is the only binding
/// between a process and its container; it is set once and never
/// rewritten for the lifetime of the process.
struct ProcessDescriptor {
    Pid pid = 0;
    Uid uid = 0;
    Vmid vmid;
    std::optional<Pid> parent_pid;
    bool alive = true;
    std::optional<Pid> proxy_pid;  // container-namespace pid, present iff vmid > 0
    std::string image_path;
    std::string image_bytes;
    std::vector<std::string> argv;
    ProcOrigin origin = ProcOrigin::Boot;
    std::map<int, FdEntry> fds;
    int next_fd = 3;
};

struct AppBinding {
    std::string package;
    Uid uid = 0;
    Vmid vmid;
};

/// Declared app install: which package runs under which uid, and
/// whether it is preinstalled/trusted (kept on the host, no container).
struct BindingSpec {
    std::string package;
    Uid uid = 0;
    bool trusted = false;

    bool operator==(const BindingSpec&) const = default;
};

/// uid -> vmid assignment. Apps sharing a UID share a container; a
/// binding is frozen for the lifetime of the simulation.
class BindingTable {
public:
    /// Binds a package. Reuses the uid's existing vmid if any,
    /// otherwise allocates the next free container index.
    /// Throws SimError{ContainersExhausted} once all 255 are taken.
    AppBinding bind(const std::string& package, Uid uid);

    /// Binds a preinstalled trusted package to the host (vmid 0).
    /// If the uid is already bound to a container, that binding wins.
    AppBinding bind_trusted(const std::string& package, Uid uid);

    std::optional<AppBinding> find_package(const std::string& package) const;
    std::optional<Vmid> vmid_for_uid(Uid uid) const;
    const std::vector<AppBinding>& bindings() const { return bindings_; }
    size_t container_count() const { return uid_to_vmid_.size() - trusted_uids_; }

private:
    std::vector<AppBinding> bindings_;
    std::map<Uid, Vmid> uid_to_vmid_;
    size_t trusted_uids_ = 0;
    int next_vmid_ = 1;
};

/// Shared-memory segment. Segments always live on the host; mapped_by
/// records each mapper with its vmid so sharing checks stay pure.
struct MemorySegment {
    int segment_id = 0;
    Pid creator_pid = 0;
    std::map<Pid, Vmid> mapped_by;
    uint64_t size_bytes = 0;
};

constexpr int kMinGuestMemoryMb = 44;
constexpr int kDefaultGuestMemoryMb = 64;

// Modeled RAM footprints (configuration constants, not measurements).
constexpr double kStockActiveMb = 99.11;
constexpr double kHeadlessActiveMb = 14.87;

struct ContainerConfig {
    Vmid vmid;
    int memory_mb = kDefaultGuestMemoryMb;
    WaitMode wait_mode = WaitMode::KernelSleep;
};

/// Throws SimError{ConfigError} when memory_mb is below the 44 MB
/// minimum a guest can boot with.
void validate_container_config(const ContainerConfig& config);

}  // namespace redirsim
