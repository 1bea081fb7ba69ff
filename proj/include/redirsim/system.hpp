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
#include <vector>

#include "redirsim/model.hpp"
#include "redirsim/policy.hpp"
#include "redirsim/transport.hpp"
#include "redirsim/vfs.hpp"
#include "redirsim/world.hpp"

namespace redirsim {

struct ExecOutcome {
    enum class Source { HostImage, ExecCache, HostWritable };

    Pid pid = 0;
    std::string binary_path;
    Source source = Source::HostImage;
    std::optional<std::string> cache_path;  // set when staged through the cache
};

/// Audit record: every process creation in any namespace.
struct SpawnRecord {
    Vmid world;
    Pid pid = 0;  // namespace-local
    Uid uid = 0;
    ProcOrigin origin = ProcOrigin::Boot;
    std::string image_path;
    bool host_descriptor = false;
};

/// The simulated machine: one host namespace, one container per bound
/// uid, the frozen read-only image they share, the execution cache,
/// process/handle/segment tables, and the syscall semantics that the
/// routing layer picks a destination for.
///
/// Not thread-safe; callers serialize access.
class System {
public:
    struct Options {
        FileTree host_image;
        std::vector<BindingSpec> bindings;
        int guest_memory_mb = kDefaultGuestMemoryMb;
        uint64_t seed = 0;
    };

    explicit System(Options options);

    System(const System&) = delete;
    System& operator=(const System&) = delete;

    // -- process lifecycle --------------------------------------------

    /// Launches a declared package: host-side process plus, for
    /// containerized apps, a proxy in the app's container. Throws
    /// SimError{ScenarioError} for undeclared packages.
    ProcessDescriptor& zygote_spawn(const std::string& package);

    /// Forks: child inherits uid and vmid, the proxy forks alongside,
    /// and remote handles are duplicated onto fresh container fds.
    ProcessDescriptor& do_fork(Pid parent);

    /// System binaries run from the host image. A containerized
    /// process's own binary is staged into the execution cache, which
    /// the app itself cannot read or write.
    ExecOutcome do_execve(Pid pid, const std::string& path,
                          std::vector<std::string> argv = {});

    /// Returns 0, ESRCH, or EPERM. Killing an app reaps its proxy;
    /// container-namespace targets resolve for containerized callers.
    int kill_process(Pid caller, Pid target);

    ProcessDescriptor* find_process(Pid pid);
    const ProcessDescriptor* find_process(Pid pid) const;
    const std::map<Pid, ProcessDescriptor>& processes() const { return procs_; }

    // -- worlds ---------------------------------------------------------

    World& host_world() { return *host_; }
    const World& host_world() const { return *host_; }
    bool has_container(Vmid vmid) const;
    World& container(Vmid vmid);  // throws SimError{OutOfRange} if absent
    const World& container(Vmid vmid) const;
    std::vector<Vmid> container_vmids() const;
    World& world_of(const ProcessDescriptor& proc);

    const BindingTable& bindings() const { return bindings_; }
    const FileTree& host_ro() const { return host_ro_; }
    const FileTree& exec_cache() const { return exec_cache_; }
    uint64_t boot_ro_digest() const { return boot_ro_digest_; }
    uint64_t seed() const { return seed_; }
    int guest_memory_mb() const { return guest_memory_mb_; }

    // -- routed execution ------------------------------------------------

    CallResult execute_on_host(Pid caller, const SyscallDesc& call, const std::string& data,
                               std::optional<int> segment_id = std::nullopt);

    /// Proxy-side execution of a marshalled call. Throws
    /// SimError{ProxyDead} when the caller or its proxy is gone.
    CallResult execute_in_container(const MarshalledCall& call,
                                    std::optional<int> segment_id = std::nullopt);

    /// Resolver for Marshaller handle validation.
    Marshaller::HandleResolver handle_resolver(Pid caller);

    /// Host fds of the caller's remote handles referring to `canonical`.
    std::vector<int> handles_for_path(const ProcessDescriptor& proc,
                                      const std::string& canonical) const;

    // -- shared memory ----------------------------------------------------

    int create_segment(Pid creator, uint64_t size);
    const MemorySegment* find_segment(int id) const;
    const std::map<int, MemorySegment>& segments() const { return segments_; }

    // -- audit -------------------------------------------------------------

    const std::vector<SpawnRecord>& spawn_log() const { return spawn_log_; }

private:
    CallResult execute_call(World& world, ProcessDescriptor& caller, Pid self,
                            const SyscallDesc& call, const std::string& data,
                            std::optional<int> segment_id,
                            const std::vector<uint32_t>& handles, bool remote);
    CallResult binder_deliver(World& world, ProcessDescriptor& caller,
                              const SyscallDesc& call, std::optional<int> segment_id);
    void kill_host_side(ProcessDescriptor& target);
    void install_hooks(World& world);
    void record_spawn(Vmid world, Pid pid, Uid uid, ProcOrigin origin,
                      const std::string& image, bool host_desc);

    FileTree host_ro_;
    FileTree exec_cache_;
    uint64_t boot_ro_digest_ = 0;
    uint64_t seed_ = 0;
    int guest_memory_mb_ = kDefaultGuestMemoryMb;

    BindingTable bindings_;
    std::optional<World> host_;
    std::map<uint8_t, World> containers_;

    std::map<Pid, ProcessDescriptor> procs_;
    std::map<int, MemorySegment> segments_;
    int next_segment_ = 1;
    std::vector<SpawnRecord> spawn_log_;
};

}  // namespace redirsim
