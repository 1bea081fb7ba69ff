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

#include "redirsim/engine.hpp"

#include <cerrno>
#include <algorithm>
#include <sstream>

#include "redirsim/image.hpp"
#include "redirsim/rule_policy.hpp"

namespace redirsim {

namespace {

const char* route_label(RouteKind kind) {
    switch (kind) {
    case RouteKind::Host:
        return "host";
    case RouteKind::Redirect:
        return "redirect";
    case RouteKind::Deny:
        return "deny";
    }
    return "?";
}

std::string basename_of(const std::string& path) {
    size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

System::Options make_options(const ScenarioTrace& trace, const EngineConfig& config) {
    System::Options opts;
    opts.host_image = config.host_image ? *config.host_image : builtin_host_image();
    opts.bindings = trace.bindings;
    opts.guest_memory_mb = config.guest_memory_mb;
    opts.seed = trace.seed;
    return opts;
}

}  // namespace

std::shared_ptr<const RoutePolicy> make_policy(const std::string& spec) {
    if (spec == "builtin") return std::make_shared<BuiltinPolicy>();
    if (spec == "passthrough") return std::make_shared<PassthroughPolicy>();
    return std::make_shared<RulePolicy>(RulePolicy::from_file(spec));
}

Engine::Engine(const ScenarioTrace& trace, EngineConfig config)
    : trace_(trace),
      config_(std::move(config)),
      policy_(config_.policy ? config_.policy
                             : std::make_shared<const BuiltinPolicy>()),
      sys_(make_options(trace_, config_)) {}

Engine::~Engine() { stop_workers(); }

ScenarioReport Engine::run() {
    report_ = {};
    report_.name = trace_.name;
    report_.seed = trace_.seed;
    report_.policy = std::string(policy_->name());
    report_.wait_mode = to_string(config_.wait_mode);
    report_.threads = config_.threads;
    dispatcher_.reset();
    wire_.clear();

    capture_baseline();
    if (config_.threads > 1) start_workers();
    for (size_t i = 0; i < trace_.steps.size(); ++i) {
        run_step(i, trace_.steps[i]);
    }
    stop_workers();

    report_.counters = dispatcher_.counter();
    report_.host_ro_digest = digest_hex(sys_.host_ro().digest());
    report_.host_rw_digest = digest_hex(sys_.host_world().rw().digest());
    for (Vmid vmid : sys_.container_vmids()) {
        report_.container_digests[vmid.value()] =
            digest_hex(sys_.container(vmid).rw().digest());
    }
    return report_;
}

std::optional<Pid> Engine::actor_pid(const std::string& name) const {
    auto it = actors_.find(name);
    if (it == actors_.end()) return std::nullopt;
    return it->second;
}

void Engine::run_step(size_t index, const Step& step) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SpawnStep>) {
                do_spawn(index, s);
            } else if constexpr (std::is_same_v<T, ForkStep>) {
                do_fork_step(index, s);
            } else if constexpr (std::is_same_v<T, ExecStep>) {
                do_exec_step(index, s);
            } else if constexpr (std::is_same_v<T, KillStep>) {
                do_kill_step(index, s);
            } else if constexpr (std::is_same_v<T, SyscallStep>) {
                do_syscall(index, s);
            } else if constexpr (std::is_same_v<T, ExpectRouteStep>) {
                do_expect_route(index, s);
            } else {
                do_assert(index, s);
            }
        },
        step);
}

ProcessDescriptor& Engine::resolve_actor(const std::string& name) {
    auto it = actors_.find(name);
    if (it == actors_.end()) {
        throw SimError(ErrorCode::ScenarioError, "unknown actor: " + name);
    }
    ProcessDescriptor* proc = sys_.find_process(it->second);
    if (!proc || !proc->alive) {
        throw SimError(ErrorCode::ScenarioError, "actor is dead: " + name);
    }
    return *proc;
}

World& Engine::operative_world(const ProcessDescriptor& proc) {
    // Where this process's writes land under the active policy; daemon
    // names in kill steps and log adoption resolve in that namespace.
    SyscallDesc probe;
    probe.kind = SyscallKind::FileWrite;
    probe.path = "/data/local/tmp/.probe";
    probe.payload_len = 1;
    RouteDecision decision = policy_->route(proc, probe);
    if (decision.kind == RouteKind::Redirect && sys_.has_container(decision.vmid)) {
        return sys_.container(decision.vmid);
    }
    return sys_.host_world();
}

Engine::Baseline Engine::snapshot() const {
    Baseline base;
    base.host_ro = sys_.host_ro().digest();
    base.host_rw = sys_.host_world().rw().digest();
    for (Vmid vmid : sys_.container_vmids()) {
        base.containers[vmid.value()] = sys_.container(vmid).rw().digest();
    }
    return base;
}

void Engine::capture_baseline() { baseline_ = snapshot(); }

void Engine::push_assertion(const std::string& id, bool pass, std::string detail) {
    report_.assertions.push_back(AssertionOutcome{id, pass, std::move(detail)});
}

// -- step execution ------------------------------------------------------

void Engine::do_spawn(size_t index, const SpawnStep& step) {
    ProcessDescriptor& proc = sys_.zygote_spawn(step.package);
    actors_[step.actor] = proc.pid;

    StepOutcome out;
    out.index = static_cast<int>(index);
    out.op = "spawn";
    out.actor = step.actor;
    out.retval = proc.pid;
    out.note = step.package + " vmid=" + std::to_string(proc.vmid.value());
    report_.steps.push_back(std::move(out));
}

void Engine::do_fork_step(size_t index, const ForkStep& step) {
    ProcessDescriptor& parent = resolve_actor(step.actor);
    SyscallDesc desc;
    desc.kind = SyscallKind::Fork;

    RouteDecision route = policy_->route(parent, desc);
    last_route_ = route;
    last_caller_vmid_ = parent.vmid;
    report_.routes_by_kind[to_string(desc.kind)][route_label(route.kind)]++;

    const Pid parent_pid = parent.pid;
    CallResult result = dispatcher_.null_redirect([&] {
        return sys_.execute_on_host(parent_pid, desc, std::string());
    });
    if (result.ok()) actors_[step.child] = static_cast<Pid>(result.retval);

    StepOutcome out;
    out.index = static_cast<int>(index);
    out.op = "fork";
    out.actor = step.actor;
    out.route = route.str();
    out.retval = result.retval;
    out.sim_errno = result.sim_errno;
    out.note = "child=" + step.child;
    report_.steps.push_back(std::move(out));
}

void Engine::do_exec_step(size_t index, const ExecStep& step) {
    ProcessDescriptor& caller = resolve_actor(step.actor);
    SyscallDesc desc;
    desc.kind = SyscallKind::Execve;
    desc.path = canonicalize_path(step.path);

    RouteDecision route = policy_->route(caller, desc);
    last_route_ = route;
    last_caller_vmid_ = caller.vmid;
    report_.routes_by_kind[to_string(desc.kind)][route_label(route.kind)]++;

    const Pid caller_pid = caller.pid;
    CallResult result;
    std::string note;
    if (route.kind == RouteKind::Deny) {
        dispatcher_.count_denied();
        result.retval = -1;
        result.sim_errno = EPERM;
    } else {
        // Execution always happens host-side; argv travels out of band.
        result = dispatcher_.null_redirect([&] {
            CallResult r;
            try {
                ExecOutcome outcome = sys_.do_execve(caller_pid, *desc.path, step.argv);
                if (outcome.cache_path) note = "staged:" + *outcome.cache_path;
            } catch (const SimError& e) {
                r.retval = -1;
                r.sim_errno =
                    e.code() == ErrorCode::NoSuchBinary ? ENOENT : EACCES;
            }
            return r;
        });
    }

    if (result.ok() && basename_of(*desc.path) == "logcat") {
        auto flag = std::find(step.argv.begin(), step.argv.end(), "-f");
        if (flag != step.argv.end() && std::next(flag) != step.argv.end()) {
            ProcessDescriptor& proc = resolve_actor(step.actor);
            World& world = operative_world(proc);
            Pid world_pid = (&world == &sys_.host_world())
                                ? proc.pid
                                : proc.proxy_pid.value_or(proc.pid);
            int err = world.adopt_logcat(world_pid, canonicalize_path(*std::next(flag)));
            if (err != 0) {
                result.retval = -1;
                result.sim_errno = err;
            }
        }
    }

    StepOutcome out;
    out.index = static_cast<int>(index);
    out.op = "exec";
    out.actor = step.actor;
    out.route = route.str();
    out.retval = result.retval;
    out.sim_errno = result.sim_errno;
    out.note = note;
    report_.steps.push_back(std::move(out));
}

void Engine::do_kill_step(size_t index, const KillStep& step) {
    ProcessDescriptor& caller = resolve_actor(step.actor);

    Pid target = 0;
    if (auto it = actors_.find(step.target); it != actors_.end()) {
        target = it->second;
    } else if (step.target == "vold") {
        target = operative_world(caller).vold().pid;
    } else if (step.target == "logcat") {
        target = operative_world(caller).logcat().pid;
    } else {
        throw SimError(ErrorCode::ScenarioError, "unknown kill target: " + step.target);
    }

    SyscallDesc desc;
    desc.kind = SyscallKind::Kill;
    desc.target_pid = target;

    RouteDecision route = policy_->route(caller, desc);
    last_route_ = route;
    last_caller_vmid_ = caller.vmid;
    report_.routes_by_kind[to_string(desc.kind)][route_label(route.kind)]++;

    const Pid caller_pid = caller.pid;
    CallResult result;
    if (route.kind == RouteKind::Deny) {
        dispatcher_.count_denied();
        result.retval = -1;
        result.sim_errno = EPERM;
    } else {
        result = dispatcher_.null_redirect([&] {
            return sys_.execute_on_host(caller_pid, desc, std::string());
        });
    }

    StepOutcome out;
    out.index = static_cast<int>(index);
    out.op = "kill";
    out.actor = step.actor;
    out.route = route.str();
    out.retval = result.retval;
    out.sim_errno = result.sim_errno;
    out.note = "target=" + step.target + " pid=" + std::to_string(target);
    report_.steps.push_back(std::move(out));
}

void Engine::do_syscall(size_t index, const SyscallStep& step) {
    ProcessDescriptor& caller = resolve_actor(step.actor);

    SyscallDesc desc;
    desc.kind = step.kind;
    if (step.path) desc.path = canonicalize_path(*step.path);
    if (step.service) desc.ioctl_service = *step.service;
    if (step.target) {
        auto it = actors_.find(*step.target);
        if (it == actors_.end()) {
            throw SimError(ErrorCode::ScenarioError, "unknown target actor: " + *step.target);
        }
        desc.target_pid = it->second;
    }
    desc.writable = step.writable;

    std::string data;
    switch (step.data.kind) {
    case DataSpec::Kind::None:
        break;
    case DataSpec::Kind::Literal:
        data = step.data.literal;
        break;
    case DataSpec::Kind::FromLastRead:
        data = last_read_;
        break;
    case DataSpec::Kind::VoldProbe:
        data = encode_vold_message(step.data.vold_index, step.data.vold_exec);
        break;
    }
    if (data.empty() && step.size && step.kind == SyscallKind::FileWrite) {
        data.resize(*step.size);
        for (size_t i = 0; i < data.size(); ++i) {
            data[i] = static_cast<char>('a' + i % 26);
        }
    }
    desc.payload_len = step.size ? *step.size : static_cast<uint32_t>(data.size());

    std::optional<int> segment;
    if (step.segment) {
        auto it = named_segments_.find(*step.segment);
        if (it == named_segments_.end()) {
            throw SimError(ErrorCode::ScenarioError, "unknown segment: " + *step.segment);
        }
        segment = it->second;
    }

    RouteDecision route = policy_->route(caller, desc);
    last_route_ = route;
    last_caller_vmid_ = caller.vmid;
    report_.routes_by_kind[to_string(desc.kind)][route_label(route.kind)]++;

    std::optional<std::string> binder_category;
    if (desc.kind == SyscallKind::BinderIoctl) {
        binder_category = to_string(classify_binder_ioctl(caller, desc).category);
        report_.binder_categories[*binder_category]++;
    }

    const Pid caller_pid = caller.pid;
    CallResult result;
    switch (route.kind) {
    case RouteKind::Host:
        result = dispatcher_.null_redirect([&] {
            return sys_.execute_on_host(caller_pid, desc, data, segment);
        });
        break;

    case RouteKind::Redirect: {
        std::vector<int> handle_args;
        if (desc.path && (desc.kind == SyscallKind::FileRead ||
                          desc.kind == SyscallKind::FileWrite ||
                          desc.kind == SyscallKind::FileClose)) {
            handle_args = sys_.handles_for_path(caller, *desc.path);
        }
        MarshalledCall call = marshaller_.marshal(caller, desc, data, handle_args,
                                                  sys_.handle_resolver(caller_pid));
        if (config_.record_wire) wire::append_record(wire_, call);
        result = dispatcher_.dispatch(call, config_.wait_mode,
                                      [&](const MarshalledCall& m) {
                                          return container_execute(m, segment);
                                      });
        break;
    }

    case RouteKind::Deny:
        dispatcher_.count_denied();
        result.retval = -1;
        result.sim_errno =
            route.reason == DenyReason::UnsupportedMmap ? ENOTSUP : EPERM;
        break;
    }

    if (result.ok() && desc.kind == SyscallKind::FileRead) {
        last_read_ = result.out_data;
    }
    if (result.ok() && desc.kind == SyscallKind::AshmemIoctl && step.save_segment) {
        named_segments_[*step.save_segment] = static_cast<int>(result.retval);
    }

    StepOutcome out;
    out.index = static_cast<int>(index);
    out.op = to_string(desc.kind);
    out.actor = step.actor;
    out.route = route.str();
    out.binder_category = binder_category;
    out.retval = result.retval;
    out.sim_errno = result.sim_errno;
    report_.steps.push_back(std::move(out));
}

void Engine::do_expect_route(size_t index, const ExpectRouteStep& step) {
    bool pass = false;
    std::string detail;
    if (!last_route_) {
        detail = "no preceding call";
    } else if (last_route_->kind != step.kind) {
        detail = "expected " + std::string(route_label(step.kind)) + ", got " +
                 last_route_->str();
    } else if (step.kind == RouteKind::Redirect) {
        Vmid expected = step.vmid ? Vmid::of(*step.vmid)
                                  : last_caller_vmid_.value_or(Vmid::host());
        pass = last_route_->vmid == expected;
        if (!pass) {
            detail = "expected redirect:" + std::to_string(expected.value()) +
                     ", got " + last_route_->str();
        }
    } else if (step.kind == RouteKind::Deny && step.reason) {
        pass = last_route_->reason == *step.reason;
        if (!pass) {
            detail = std::string("expected deny:") + to_string(*step.reason) +
                     ", got " + last_route_->str();
        }
    } else {
        pass = true;
    }

    push_assertion("expect_route#" + std::to_string(index), pass, detail);

    StepOutcome out;
    out.index = static_cast<int>(index);
    out.op = "expect_route";
    out.retval = pass ? 0 : -1;
    out.note = pass ? last_route_ ? last_route_->str() : std::string() : detail;
    report_.steps.push_back(std::move(out));
}

void Engine::assert_confinement(const std::string& prefix, Vmid attacker,
                                const std::string& exploit_path) {
    const std::string canonical = canonicalize_path(exploit_path);

    bool ro_clean = sys_.host_ro().digest() == baseline_.host_ro;
    push_assertion(prefix + ".host_ro", ro_clean,
                   ro_clean ? "" : "host image digest changed");

    std::string rooted;
    for (const WorldProcess& wp : sys_.host_world().processes()) {
        if (wp.alive && wp.uid == 0 && wp.origin == ProcOrigin::Scenario) {
            rooted = wp.name;
            break;
        }
    }
    push_assertion(prefix + ".no_host_root", rooted.empty(),
                   rooted.empty() ? "" : "uid-0 process on host: " + rooted);

    bool in_attacker = sys_.has_container(attacker) &&
                       sys_.container(attacker).rw().has_file(canonical);
    bool on_host = sys_.host_world().rw().has_file(canonical);
    bool elsewhere = false;
    for (Vmid vmid : sys_.container_vmids()) {
        if (vmid != attacker && sys_.container(vmid).rw().has_file(canonical)) {
            elsewhere = true;
        }
    }
    std::ostringstream copy_detail;
    copy_detail << canonical << " attacker=" << (in_attacker ? "yes" : "no")
                << " host=" << (on_host ? "yes" : "no")
                << " others=" << (elsewhere ? "yes" : "no");
    push_assertion(prefix + ".exploit_copy", in_attacker && !on_host && !elsewhere,
                   copy_detail.str());

    std::string changed;
    for (Vmid vmid : sys_.container_vmids()) {
        if (vmid == attacker) continue;
        auto it = baseline_.containers.find(vmid.value());
        uint64_t before = it == baseline_.containers.end() ? 0 : it->second;
        if (sys_.container(vmid).rw().digest() != before) {
            changed += (changed.empty() ? "" : ",") + std::to_string(vmid.value());
        }
    }
    push_assertion(prefix + ".others_unchanged", changed.empty(),
                   changed.empty() ? "" : "containers changed: " + changed);
}

void Engine::do_assert(size_t index, const AssertStep& step) {
    auto arg = [&](const std::string& key) -> std::optional<std::string> {
        auto it = step.args.find(key);
        if (it == step.args.end()) return std::nullopt;
        return it->second;
    };
    size_t before = report_.assertions.size();

    if (step.id == "baseline") {
        capture_baseline();
        push_assertion("baseline", true, "state snapshot taken");
    } else if (step.id == "confinement") {
        ProcessDescriptor& attacker = resolve_actor(arg("attacker").value_or(""));
        assert_confinement("confinement", attacker.vmid, arg("exploit").value_or(""));
    } else if (step.id == "host_ro_unchanged") {
        bool pass = sys_.host_ro().digest() == baseline_.host_ro;
        push_assertion(step.id, pass, pass ? "" : "host image digest changed");
    } else if (step.id == "host_rw_unchanged") {
        bool pass = sys_.host_world().rw().digest() == baseline_.host_rw;
        push_assertion(step.id, pass, pass ? "" : "host writable tree changed");
    } else if (step.id == "no_host_uid0") {
        std::string rooted;
        for (const WorldProcess& wp : sys_.host_world().processes()) {
            if (wp.alive && wp.uid == 0 && wp.origin == ProcOrigin::Scenario) {
                rooted = wp.name;
                break;
            }
        }
        push_assertion(step.id, rooted.empty(),
                       rooted.empty() ? "" : "uid-0 process on host: " + rooted);
    } else if (step.id == "container_has_uid0") {
        ProcessDescriptor& actor = resolve_actor(arg("actor").value_or(""));
        bool pass = false;
        std::string found;
        if (actor.vmid.is_container()) {
            for (const WorldProcess& wp : sys_.container(actor.vmid).processes()) {
                if (wp.alive && wp.uid == 0 && wp.origin == ProcOrigin::Scenario) {
                    pass = true;
                    found = wp.name;
                    break;
                }
            }
        }
        push_assertion(step.id, pass,
                       pass ? "uid-0 in container " + std::to_string(actor.vmid.value()) +
                                  ": " + found
                            : "no scenario uid-0 process in actor's container");
    } else if (step.id == "others_unchanged") {
        ProcessDescriptor& actor = resolve_actor(arg("except").value_or(""));
        std::string changed;
        for (Vmid vmid : sys_.container_vmids()) {
            if (vmid == actor.vmid) continue;
            auto it = baseline_.containers.find(vmid.value());
            uint64_t prior = it == baseline_.containers.end() ? 0 : it->second;
            if (sys_.container(vmid).rw().digest() != prior) {
                changed += (changed.empty() ? "" : ",") + std::to_string(vmid.value());
            }
        }
        push_assertion(step.id, changed.empty(),
                       changed.empty() ? "" : "containers changed: " + changed);
    } else if (step.id == "file_exists" || step.id == "file_absent") {
        const std::string canonical = canonicalize_path(arg("path").value_or(""));
        const std::string where = arg("world").value_or("host_rw");
        const FileTree* tree = nullptr;
        if (where == "host_rw") {
            tree = &sys_.host_world().rw();
        } else if (where == "host_ro") {
            tree = &sys_.host_ro();
        } else {
            ProcessDescriptor& actor = resolve_actor(where);
            if (actor.vmid.is_container()) tree = &sys_.container(actor.vmid).rw();
        }
        bool present = tree && tree->has_file(canonical);
        bool pass = step.id == "file_exists" ? present : !present;
        push_assertion(step.id, pass, canonical + " in " + where +
                                          (present ? " present" : " missing"));
    } else if (step.id == "process_alive" || step.id == "process_dead") {
        auto it = actors_.find(arg("actor").value_or(""));
        bool alive = false;
        if (it != actors_.end()) {
            const ProcessDescriptor* proc = sys_.find_process(it->second);
            alive = proc && proc->alive;
        }
        bool pass = step.id == "process_alive" ? alive : !alive;
        push_assertion(step.id, pass, arg("actor").value_or("") +
                                          (alive ? " alive" : " dead"));
    } else {
        push_assertion(step.id, false, "unknown assertion id");
    }

    size_t failures = 0;
    for (size_t i = before; i < report_.assertions.size(); ++i) {
        if (!report_.assertions[i].pass) ++failures;
    }
    StepOutcome out;
    out.index = static_cast<int>(index);
    out.op = "assert:" + step.id;
    out.retval = failures == 0 ? 0 : -static_cast<int64_t>(failures);
    report_.steps.push_back(std::move(out));
}

// -- worker pool -----------------------------------------------------------

CallResult Engine::container_execute(const MarshalledCall& call,
                                     std::optional<int> segment) {
    auto run = [this, &call, segment] {
        std::lock_guard<std::mutex> lock(sys_mu_);
        return sys_.execute_in_container(call, segment);
    };
    auto it = workers_.find(call.vmid.value());
    if (it == workers_.end()) return run();

    Worker& worker = *it->second;
    std::packaged_task<CallResult()> task(run);
    std::future<CallResult> done = task.get_future();
    {
        std::lock_guard<std::mutex> lock(worker.mu);
        worker.queue.push_back(std::move(task));
    }
    worker.cv.notify_one();
    return done.get();
}

void Engine::start_workers() {
    for (Vmid vmid : sys_.container_vmids()) {
        auto worker = std::make_unique<Worker>();
        Worker* raw = worker.get();
        worker->thread = std::thread([raw] {
            for (;;) {
                std::packaged_task<CallResult()> task;
                {
                    std::unique_lock<std::mutex> lock(raw->mu);
                    raw->cv.wait(lock,
                                 [raw] { return raw->stop || !raw->queue.empty(); });
                    if (raw->queue.empty()) return;
                    task = std::move(raw->queue.front());
                    raw->queue.pop_front();
                }
                task();
            }
        });
        workers_.emplace(vmid.value(), std::move(worker));
    }
}

void Engine::stop_workers() {
    for (auto& [vmid, worker] : workers_) {
        {
            std::lock_guard<std::mutex> lock(worker->mu);
            worker->stop = true;
        }
        worker->cv.notify_all();
        if (worker->thread.joinable()) worker->thread.join();
    }
    workers_.clear();
}

ScenarioReport run_scenario(const ScenarioTrace& trace, EngineConfig config) {
    Engine engine(trace, std::move(config));
    return engine.run();
}

}  // namespace redirsim
