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

#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <thread>

#include "redirsim/report.hpp"
#include "redirsim/scenario.hpp"
#include "redirsim/system.hpp"
#include "redirsim/transport.hpp"

namespace redirsim {

struct EngineConfig {
    std::shared_ptr<const RoutePolicy> policy;  // default: BuiltinPolicy
    WaitMode wait_mode = WaitMode::KernelSleep;
    int threads = 1;  // >1 runs container calls on per-container workers
    int guest_memory_mb = kDefaultGuestMemoryMb;
    std::optional<FileTree> host_image;  // default: builtin image
    bool record_wire = false;
};

/// Builds a policy from a CLI-style spec: "builtin", "passthrough", or
/// a path to a JSON rule file.
std::shared_ptr<const RoutePolicy> make_policy(const std::string& spec);

/// Replays one trace: routes every issued call, moves it over the
/// simulated transport, applies kernel semantics, and evaluates the
/// trace's assertions.
class Engine {
public:
    Engine(const ScenarioTrace& trace, EngineConfig config = {});
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    ScenarioReport run();

    System& system() { return sys_; }
    const System& system() const { return sys_; }
    const Dispatcher& dispatcher() const { return dispatcher_; }

    /// Length-prefixed capture of every marshalled message, when
    /// record_wire is on.
    const std::string& wire_capture() const { return wire_; }

    std::optional<Pid> actor_pid(const std::string& name) const;

private:
    struct Baseline {
        uint64_t host_ro = 0;
        uint64_t host_rw = 0;
        std::map<uint8_t, uint64_t> containers;
    };

    struct Worker {
        std::thread thread;
        std::mutex mu;
        std::condition_variable cv;
        std::deque<std::packaged_task<CallResult()>> queue;
        bool stop = false;
    };

    void run_step(size_t index, const Step& step);
    void do_spawn(size_t index, const SpawnStep& step);
    void do_fork_step(size_t index, const ForkStep& step);
    void do_exec_step(size_t index, const ExecStep& step);
    void do_kill_step(size_t index, const KillStep& step);
    void do_syscall(size_t index, const SyscallStep& step);
    void do_expect_route(size_t index, const ExpectRouteStep& step);
    void do_assert(size_t index, const AssertStep& step);

    ProcessDescriptor& resolve_actor(const std::string& name);
    World& operative_world(const ProcessDescriptor& proc);
    Baseline snapshot() const;
    void capture_baseline();
    void push_assertion(const std::string& id, bool pass, std::string detail);
    void assert_confinement(const std::string& prefix, Vmid attacker,
                            const std::string& exploit_path);
    CallResult container_execute(const MarshalledCall& call, std::optional<int> segment);
    void start_workers();
    void stop_workers();

    ScenarioTrace trace_;
    EngineConfig config_;
    std::shared_ptr<const RoutePolicy> policy_;
    System sys_;
    Marshaller marshaller_;
    Dispatcher dispatcher_;

    std::map<std::string, Pid> actors_;
    std::map<std::string, int> named_segments_;
    std::string last_read_;
    std::optional<RouteDecision> last_route_;
    std::optional<Vmid> last_caller_vmid_;
    Baseline baseline_;
    ScenarioReport report_;
    std::string wire_;

    std::mutex sys_mu_;
    std::map<uint8_t, std::unique_ptr<Worker>> workers_;
};

ScenarioReport run_scenario(const ScenarioTrace& trace, EngineConfig config = {});

}  // namespace redirsim
