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

#include "redirsim/system.hpp"

#include <algorithm>
#include <cerrno>

#include "redirsim/image.hpp"

namespace redirsim {

namespace {

std::string basename_of(const std::string& path) {
    size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::string apk_path(const std::string& package) {
    return "/data/app/" + package + "/base.apk";
}

std::string data_dir(const std::string& package) {
    return "/data/data/" + package;
}

// Segment membership key. Host processes map under their pid;
// namespace-local processes (container services) get a tagged key so
// they cannot collide with host pids.
Pid member_key(Vmid world, Pid pid) {
    if (world.is_host()) return pid;
    return -(static_cast<Pid>(world.value()) * 100000 + pid);
}

}  // namespace

System::System(Options options)
    : host_ro_(std::move(options.host_image)),
      seed_(options.seed),
      guest_memory_mb_(options.guest_memory_mb) {
    // Install declared packages, then freeze the read-only image.
    for (const BindingSpec& spec : options.bindings) {
        if (!host_ro_.has_file(apk_path(spec.package))) {
            host_ro_.append(apk_path(spec.package), synthesize_package(spec.package));
        }
        if (spec.trusted) {
            bindings_.bind_trusted(spec.package, spec.uid);
        } else {
            bindings_.bind(spec.package, spec.uid);
        }
    }
    boot_ro_digest_ = host_ro_.digest();

    host_.emplace(Vmid::host(), &host_ro_, seed_);
    install_hooks(*host_);
    for (const WorldProcess& wp : host_->processes()) {
        ProcessDescriptor desc;
        desc.pid = wp.pid;
        desc.uid = wp.uid;
        desc.vmid = Vmid::host();
        if (wp.pid != 1) desc.parent_pid = 1;
        desc.image_path = wp.image_path;
        desc.image_bytes = wp.image_bytes;
        desc.argv = wp.argv;
        desc.origin = ProcOrigin::Boot;
        procs_.emplace(wp.pid, std::move(desc));
        record_spawn(Vmid::host(), wp.pid, wp.uid, ProcOrigin::Boot, wp.image_path, true);
    }

    for (const AppBinding& binding : bindings_.bindings()) {
        host_->rw().mkdirs(data_dir(binding.package));
        if (binding.vmid.is_host()) continue;
        if (!containers_.count(binding.vmid.value())) {
            ContainerConfig config{binding.vmid, guest_memory_mb_, WaitMode::KernelSleep};
            validate_container_config(config);
            auto [it, inserted] = containers_.try_emplace(binding.vmid.value(),
                                                          binding.vmid, &host_ro_, seed_);
            install_hooks(it->second);
            for (const WorldProcess& wp : it->second.processes()) {
                record_spawn(binding.vmid, wp.pid, wp.uid, ProcOrigin::Boot, wp.image_path,
                             false);
            }
        }
        container(binding.vmid).rw().mkdirs(data_dir(binding.package));
    }
}

void System::install_hooks(World& world) {
    const Vmid vmid = world.vmid();
    if (vmid.is_host()) {
        world.set_spawn_hook([this](Uid uid, const std::string& name,
                                    const std::string& image_path,
                                    const std::string& image_bytes,
                                    std::vector<std::string> argv) {
            Pid pid = host_->spawn(uid, name, image_path, image_bytes, argv,
                                   ProcOrigin::Scenario);
            ProcessDescriptor desc;
            desc.pid = pid;
            desc.uid = uid;
            desc.vmid = Vmid::host();
            desc.parent_pid = 1;
            desc.image_path = image_path;
            desc.image_bytes = image_bytes;
            desc.argv = std::move(argv);
            desc.origin = ProcOrigin::Scenario;
            procs_.emplace(pid, std::move(desc));
            record_spawn(Vmid::host(), pid, uid, ProcOrigin::Scenario, image_path, true);
            return pid;
        });
        return;
    }
    world.set_spawn_hook([this, vmid](Uid uid, const std::string& name,
                                      const std::string& image_path,
                                      const std::string& image_bytes,
                                      std::vector<std::string> argv) {
        Pid pid = container(vmid).spawn(uid, name, image_path, image_bytes, std::move(argv),
                                        ProcOrigin::Scenario);
        record_spawn(vmid, pid, uid, ProcOrigin::Scenario, image_path, false);
        return pid;
    });
}

void System::record_spawn(Vmid world, Pid pid, Uid uid, ProcOrigin origin,
                          const std::string& image, bool host_desc) {
    spawn_log_.push_back(SpawnRecord{world, pid, uid, origin, image, host_desc});
}

ProcessDescriptor& System::zygote_spawn(const std::string& package) {
    std::optional<AppBinding> binding = bindings_.find_package(package);
    if (!binding) {
        throw SimError(ErrorCode::ScenarioError, "package not declared: " + package);
    }
    const std::string image = apk_path(package);
    const std::string* apk = host_ro_.read(image);
    const std::string bytes = apk ? *apk : synthesize_package(package);

    Pid pid = host_->spawn(binding->uid, package, image, bytes, {package},
                           ProcOrigin::Scenario);
    ProcessDescriptor desc;
    desc.pid = pid;
    desc.uid = binding->uid;
    desc.vmid = binding->vmid;
    desc.parent_pid = 2;  // zygote
    desc.image_path = image;
    desc.image_bytes = bytes;
    desc.argv = {package};
    desc.origin = ProcOrigin::Scenario;

    if (binding->vmid.is_container()) {
        Pid proxy = container(binding->vmid)
                        .spawn(binding->uid, package, image, bytes, {package},
                               ProcOrigin::Scenario, pid);
        desc.proxy_pid = proxy;
        record_spawn(binding->vmid, proxy, binding->uid, ProcOrigin::Scenario, image, false);
    }
    record_spawn(Vmid::host(), pid, binding->uid, ProcOrigin::Scenario, image, true);
    auto [it, inserted] = procs_.emplace(pid, std::move(desc));
    return it->second;
}

ProcessDescriptor& System::do_fork(Pid parent) {
    ProcessDescriptor* parent_desc = find_process(parent);
    if (!parent_desc || !parent_desc->alive) {
        throw SimError(ErrorCode::NoSuchProcess, "fork: no process " + std::to_string(parent));
    }
    const WorldProcess* parent_entry = host_->find(parent);
    const std::string name = parent_entry ? parent_entry->name : parent_desc->image_path;

    Pid pid = host_->spawn(parent_desc->uid, name, parent_desc->image_path,
                           parent_desc->image_bytes, parent_desc->argv,
                           ProcOrigin::Scenario);
    ProcessDescriptor child;
    child.pid = pid;
    child.uid = parent_desc->uid;
    child.vmid = parent_desc->vmid;  // container identity is always inherited
    child.parent_pid = parent;
    child.image_path = parent_desc->image_path;
    child.image_bytes = parent_desc->image_bytes;
    child.argv = parent_desc->argv;
    child.origin = ProcOrigin::Scenario;
    child.next_fd = parent_desc->next_fd;

    if (parent_desc->vmid.is_container()) {
        World& guest = container(parent_desc->vmid);
        Pid proxy = guest.spawn(parent_desc->uid, name, parent_desc->image_path,
                                parent_desc->image_bytes, parent_desc->argv,
                                ProcOrigin::Scenario, pid);
        child.proxy_pid = proxy;
        record_spawn(parent_desc->vmid, proxy, parent_desc->uid, ProcOrigin::Scenario,
                     parent_desc->image_path, false);
        for (const auto& [fd, entry] : parent_desc->fds) {
            if (const LocalOpen* local = std::get_if<LocalOpen>(&entry)) {
                child.fds.emplace(fd, *local);
                continue;
            }
            const RemoteHandle& handle = std::get<RemoteHandle>(entry);
            int cfd = guest.dup_fd(proxy, handle.container_fd);
            if (cfd < 0) continue;  // stale handle, drop from the child
            child.fds.emplace(fd, RemoteHandle{fd, cfd, pid, handle.vmid});
        }
    } else {
        child.fds = parent_desc->fds;
        for (auto& [fd, entry] : child.fds) {
            if (RemoteHandle* handle = std::get_if<RemoteHandle>(&entry)) {
                handle->owner_pid = pid;
            }
        }
    }

    record_spawn(Vmid::host(), pid, child.uid, ProcOrigin::Scenario, child.image_path, true);
    auto [it, inserted] = procs_.emplace(pid, std::move(child));
    return it->second;
}

ExecOutcome System::do_execve(Pid pid, const std::string& path,
                              std::vector<std::string> argv) {
    ProcessDescriptor* proc = find_process(pid);
    if (!proc || !proc->alive) {
        throw SimError(ErrorCode::NoSuchProcess, "execve: no process " + std::to_string(pid));
    }
    const std::string canonical = canonicalize_path(path);

    ExecOutcome outcome;
    outcome.pid = pid;
    outcome.binary_path = canonical;

    std::string bytes;
    if (in_readonly_region(canonical)) {
        const std::string* image = host_ro_.read(canonical);
        if (!image) {
            throw SimError(ErrorCode::NoSuchBinary, "no system binary " + canonical);
        }
        bytes = *image;
        outcome.source = ExecOutcome::Source::HostImage;
    } else if (proc->vmid.is_container()) {
        // User binary: it lives in the container, but execution happens
        // on the host. Stage a copy into the cache, which no app path
        // can reach.
        const std::string cache_root = "/vm" + std::to_string(proc->vmid.value());
        const std::string joined =
            cache_root + (path.empty() || path.front() != '/' ? "/" + path : path);
        const std::string staged = canonicalize_path(joined);
        if (!path_under(staged, cache_root) || staged == cache_root) {
            throw SimError(ErrorCode::CacheViolation,
                           "exec target escapes the cache root: " + path);
        }
        World& guest = container(proc->vmid);
        World::ReadResult src = guest.read_file(proc->proxy_pid.value_or(0), canonical);
        if (src.err != 0) {
            throw SimError(ErrorCode::NoSuchBinary, "no binary " + canonical);
        }
        bytes = src.data;
        exec_cache_.put(staged, bytes);
        outcome.source = ExecOutcome::Source::ExecCache;
        outcome.cache_path = staged;
    } else {
        if (const std::string* data = host_->rw().read(canonical)) {
            bytes = *data;
            outcome.source = ExecOutcome::Source::HostWritable;
        } else if (const std::string* image = host_ro_.read(canonical)) {
            bytes = *image;
            outcome.source = ExecOutcome::Source::HostImage;
        } else {
            throw SimError(ErrorCode::NoSuchBinary, "no binary " + canonical);
        }
    }

    if (argv.empty()) argv = {canonical};
    proc->image_path = canonical;
    proc->image_bytes = bytes;
    proc->argv = argv;

    if (WorldProcess* entry = host_->find(pid)) {
        entry->name = basename_of(canonical);
        entry->image_path = canonical;
        entry->image_bytes = bytes;
        entry->argv = argv;
    }
    if (proc->vmid.is_container() && proc->proxy_pid) {
        if (WorldProcess* proxy = container(proc->vmid).find(*proc->proxy_pid)) {
            proxy->name = basename_of(canonical);
            proxy->image_path = canonical;
            proxy->image_bytes = bytes;
            proxy->argv = argv;
        }
    }
    return outcome;
}

void System::kill_host_side(ProcessDescriptor& target) {
    target.alive = false;
    host_->kill(target.pid);
    if (target.vmid.is_container() && target.proxy_pid) {
        container(target.vmid).kill(*target.proxy_pid);
    }
    target.fds.clear();
}

int System::kill_process(Pid caller, Pid target) {
    ProcessDescriptor* caller_desc = find_process(caller);
    if (!caller_desc || !caller_desc->alive) {
        throw SimError(ErrorCode::NoSuchProcess, "kill: no caller " + std::to_string(caller));
    }

    if (caller_desc->vmid.is_container()) {
        World& guest = container(caller_desc->vmid);
        if (WorldProcess* wp = guest.find(target)) {
            if (!wp->alive) return ESRCH;
            std::optional<Pid> mirrors = wp->mirrors_host_pid;
            guest.kill(target);
            if (mirrors) {
                if (ProcessDescriptor* app = find_process(*mirrors)) {
                    if (app->alive) {
                        app->alive = false;
                        host_->kill(app->pid);
                        app->fds.clear();
                    }
                }
            }
            return 0;
        }
        // Fall back to the host table: targeting a sibling app by its
        // host pid works; anything outside the caller's container is
        // refused before existence is even revealed.
        ProcessDescriptor* desc = find_process(target);
        if (!desc || !desc->alive) return ESRCH;
        if (desc->vmid != caller_desc->vmid) return EPERM;
        kill_host_side(*desc);
        return 0;
    }

    ProcessDescriptor* desc = find_process(target);
    if (!desc || !desc->alive) {
        // Host callers may also address a host-namespace daemon entry.
        if (WorldProcess* wp = host_->find(target); wp && wp->alive) {
            if (caller_desc->uid != 0 && caller_desc->uid != wp->uid) return EPERM;
            host_->kill(target);
            return 0;
        }
        return ESRCH;
    }
    if (caller_desc->uid != 0 && caller_desc->uid != desc->uid) return EPERM;
    kill_host_side(*desc);
    return 0;
}

ProcessDescriptor* System::find_process(Pid pid) {
    auto it = procs_.find(pid);
    return it == procs_.end() ? nullptr : &it->second;
}

const ProcessDescriptor* System::find_process(Pid pid) const {
    return const_cast<System*>(this)->find_process(pid);
}

bool System::has_container(Vmid vmid) const {
    return containers_.count(vmid.value()) > 0;
}

World& System::container(Vmid vmid) {
    auto it = containers_.find(vmid.value());
    if (it == containers_.end()) {
        throw SimError(ErrorCode::OutOfRange,
                       "no container " + std::to_string(vmid.value()));
    }
    return it->second;
}

const World& System::container(Vmid vmid) const {
    return const_cast<System*>(this)->container(vmid);
}

std::vector<Vmid> System::container_vmids() const {
    std::vector<Vmid> out;
    out.reserve(containers_.size());
    for (const auto& [value, world] : containers_) out.push_back(Vmid::of(value));
    return out;
}

World& System::world_of(const ProcessDescriptor& proc) {
    return proc.vmid.is_host() ? *host_ : container(proc.vmid);
}

Marshaller::HandleResolver System::handle_resolver(Pid caller) {
    return [this, caller](int host_fd) -> std::optional<RemoteHandle> {
        const ProcessDescriptor* proc = find_process(caller);
        if (!proc) return std::nullopt;
        auto it = proc->fds.find(host_fd);
        if (it == proc->fds.end()) return std::nullopt;
        const RemoteHandle* handle = std::get_if<RemoteHandle>(&it->second);
        return handle ? std::optional<RemoteHandle>(*handle) : std::nullopt;
    };
}

std::vector<int> System::handles_for_path(const ProcessDescriptor& proc,
                                          const std::string& canonical) const {
    std::vector<int> out;
    for (const auto& [fd, entry] : proc.fds) {
        const RemoteHandle* handle = std::get_if<RemoteHandle>(&entry);
        if (!handle) continue;
        const World& guest = container(handle->vmid);
        if (auto path = guest.open_path(handle->container_fd); path && *path == canonical) {
            out.push_back(fd);
        }
    }
    return out;
}

int System::create_segment(Pid creator, uint64_t size) {
    ProcessDescriptor* proc = find_process(creator);
    if (!proc) {
        throw SimError(ErrorCode::NoSuchProcess,
                       "segment creator unknown: " + std::to_string(creator));
    }
    int id = next_segment_++;
    MemorySegment segment;
    segment.segment_id = id;
    segment.creator_pid = creator;
    segment.size_bytes = size ? size : 4096;
    segment.mapped_by[creator] = proc->vmid;
    segments_.emplace(id, std::move(segment));
    return id;
}

const MemorySegment* System::find_segment(int id) const {
    auto it = segments_.find(id);
    return it == segments_.end() ? nullptr : &it->second;
}

CallResult System::execute_on_host(Pid caller, const SyscallDesc& call,
                                   const std::string& data,
                                   std::optional<int> segment_id) {
    ProcessDescriptor* proc = find_process(caller);
    if (!proc || !proc->alive) {
        throw SimError(ErrorCode::NoSuchProcess,
                       "host call from unknown pid " + std::to_string(caller));
    }
    return execute_call(*host_, *proc, caller, call, data, segment_id, {}, false);
}

CallResult System::execute_in_container(const MarshalledCall& call,
                                        std::optional<int> segment_id) {
    ProcessDescriptor* proc = find_process(call.caller_pid);
    if (!proc) {
        throw SimError(ErrorCode::NoSuchProcess,
                       "marshalled call from unknown pid " + std::to_string(call.caller_pid));
    }
    if (call.vmid != proc->vmid) {
        throw SimError(ErrorCode::MalformedCall, "call vmid does not match caller vmid");
    }
    World& guest = container(call.vmid);
    if (!proc->alive || !proc->proxy_pid) {
        throw SimError(ErrorCode::ProxyDead, "caller has no live proxy");
    }
    const WorldProcess* proxy = guest.find(*proc->proxy_pid);
    if (!proxy || !proxy->alive) {
        throw SimError(ErrorCode::ProxyDead,
                       "proxy " + std::to_string(*proc->proxy_pid) + " is dead");
    }
    return execute_call(guest, *proc, *proc->proxy_pid, call.call, call.data, segment_id,
                        call.handles, true);
}

CallResult System::binder_deliver(World& world, ProcessDescriptor& /*caller*/,
                                  const SyscallDesc& call, std::optional<int> segment_id) {
    CallResult result;

    if (call.target_pid) {
        ProcessDescriptor* target = find_process(*call.target_pid);
        if (!target || !target->alive) {
            result.sim_errno = ESRCH;
            return result;
        }
        if (segment_id) {
            auto it = segments_.find(*segment_id);
            if (it == segments_.end()) {
                throw SimError(ErrorCode::BadHandle,
                               "no segment " + std::to_string(*segment_id));
            }
            if (check_segment_share(it->second, *target) == ShareCheck::Denied) {
                result.sim_errno = EPERM;
                return result;
            }
            it->second.mapped_by[member_key(target->vmid, target->pid)] = target->vmid;
        }
        return result;
    }

    const std::string service = call.ioctl_service.value_or("");
    std::optional<Pid> endpoint = world.binder_endpoint(service);
    if (!endpoint) {
        result.sim_errno = ENOENT;
        return result;
    }
    if (segment_id) {
        auto it = segments_.find(*segment_id);
        if (it == segments_.end()) {
            throw SimError(ErrorCode::BadHandle, "no segment " + std::to_string(*segment_id));
        }
        ProcessDescriptor recipient;
        recipient.pid = *endpoint;
        recipient.uid = 1000;
        recipient.vmid = world.vmid();
        if (check_segment_share(it->second, recipient) == ShareCheck::Denied) {
            result.sim_errno = EPERM;
            return result;
        }
        it->second.mapped_by[member_key(world.vmid(), *endpoint)] = world.vmid();
    }
    return result;
}

CallResult System::execute_call(World& world, ProcessDescriptor& caller, Pid self,
                                const SyscallDesc& call, const std::string& data,
                                std::optional<int> segment_id,
                                const std::vector<uint32_t>& handles, bool remote) {
    CallResult result;
    const std::string path = call.path ? canonicalize_path(*call.path) : std::string();

    switch (call.kind) {
    case SyscallKind::FileOpen: {
        if (remote) {
            int fd = world.open_fd(self, path, call.writable);
            if (fd < 0) {
                result.sim_errno = -fd;
                break;
            }
            int host_fd = caller.next_fd++;
            RemoteHandle handle{host_fd, fd, caller.pid, world.vmid()};
            caller.fds.emplace(host_fd, handle);
            result.handle = handle;
            result.retval = host_fd;
        } else {
            int err = world.check_open(self, path, call.writable);
            if (err != 0) {
                result.sim_errno = err;
                break;
            }
            int host_fd = caller.next_fd++;
            caller.fds.emplace(host_fd, LocalOpen{path, call.writable});
            result.retval = host_fd;
        }
        break;
    }

    case SyscallKind::FileRead: {
        World::ReadResult read = world.read_file(self, path);
        if (read.err != 0) {
            result.sim_errno = read.err;
            break;
        }
        result.retval = static_cast<int64_t>(read.data.size());
        result.out_data = std::move(read.data);
        break;
    }

    case SyscallKind::FileWrite: {
        int err = world.write_file(path, data);
        if (err != 0) {
            result.sim_errno = err;
            break;
        }
        result.retval = static_cast<int64_t>(data.size());
        break;
    }

    case SyscallKind::FileClose: {
        if (remote) {
            if (handles.empty()) {
                result.sim_errno = EBADF;
                break;
            }
            bool all_closed = true;
            for (uint32_t cfd : handles) {
                all_closed &= world.close_fd(self, static_cast<int>(cfd));
                for (auto it = caller.fds.begin(); it != caller.fds.end();) {
                    const RemoteHandle* handle = std::get_if<RemoteHandle>(&it->second);
                    bool match = handle && handle->vmid == world.vmid() &&
                                 handle->container_fd == static_cast<int>(cfd);
                    it = match ? caller.fds.erase(it) : std::next(it);
                }
            }
            if (!all_closed) result.sim_errno = EBADF;
        } else {
            auto match = caller.fds.end();
            for (auto it = caller.fds.begin(); it != caller.fds.end(); ++it) {
                const LocalOpen* local = std::get_if<LocalOpen>(&it->second);
                if (local && local->path == path) {
                    match = it;
                    break;
                }
            }
            if (match == caller.fds.end()) {
                result.sim_errno = EBADF;
            } else {
                caller.fds.erase(match);
            }
        }
        break;
    }

    case SyscallKind::FileUnlink: {
        int err = world.unlink_file(path);
        if (err != 0) result.sim_errno = err;
        break;
    }

    case SyscallKind::Mmap: {
        if (path_under(path, "/dev/ashmem")) {
            if (segment_id) {
                auto it = segments_.find(*segment_id);
                if (it == segments_.end()) {
                    result.sim_errno = EINVAL;
                    break;
                }
                it->second.mapped_by[member_key(caller.vmid, caller.pid)] = caller.vmid;
            }
            break;
        }
        if (!world.file_exists(path)) {
            result.sim_errno = ENOENT;
            break;
        }
        break;
    }

    case SyscallKind::Fork:
    case SyscallKind::Clone: {
        ProcessDescriptor& child = do_fork(caller.pid);
        result.retval = child.pid;
        break;
    }

    case SyscallKind::Execve: {
        try {
            do_execve(caller.pid, call.path.value_or(""), {});
        } catch (const SimError& e) {
            result.sim_errno = e.code() == ErrorCode::NoSuchBinary ? ENOENT : EACCES;
        }
        break;
    }

    case SyscallKind::Kill: {
        int err = kill_process(caller.pid, call.target_pid.value_or(0));
        if (err != 0) result.sim_errno = err;
        break;
    }

    case SyscallKind::GetPid:
        result.retval = caller.pid;
        break;

    case SyscallKind::SocketOp:
        result.retval = 0;
        break;

    case SyscallKind::NetlinkSend: {
        World::VoldOutcome outcome = world.vold_message(data);
        if (outcome.err != 0) {
            result.sim_errno = outcome.err;
            break;
        }
        result.retval = static_cast<int64_t>(data.size());
        break;
    }

    case SyscallKind::BinderIoctl:
        result = binder_deliver(world, caller, call, segment_id);
        break;

    case SyscallKind::AshmemIoctl: {
        uint64_t size = call.payload_len ? call.payload_len : data.size();
        result.retval = create_segment(caller.pid, size);
        break;
    }

    case SyscallKind::DeviceIoctl:
        if (!world.is_device(path)) result.sim_errno = ENODEV;
        break;

    case SyscallKind::Insmod:
    case SyscallKind::Rmmod:
    case SyscallKind::Shutdown:
        // Only reachable for trusted host callers; modeled as no-ops.
        break;
    }
    return result;
}

}  // namespace redirsim
