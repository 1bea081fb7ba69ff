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

#include "redirsim/builtin_scenarios.hpp"

namespace redirsim {

namespace {

constexpr char kExploitCopy[] = "/data/local/tmp/boomsh";
constexpr char kCrashLog[] = "/data/local/tmp/crash.log";

SyscallStep call(const char* actor, SyscallKind kind) {
    SyscallStep step;
    step.actor = actor;
    step.kind = kind;
    return step;
}

SyscallStep file_read(const char* actor, const char* path) {
    SyscallStep step = call(actor, SyscallKind::FileRead);
    step.path = path;
    return step;
}

ExpectRouteStep expect_host() { return ExpectRouteStep{RouteKind::Host, {}, {}}; }
ExpectRouteStep expect_redirect() { return ExpectRouteStep{RouteKind::Redirect, {}, {}}; }

}  // namespace

ScenarioTrace builtin_gingerbreak() {
    ScenarioTrace trace;
    trace.name = "gingerbreak";
    trace.seed = 1911;
    trace.bindings.push_back(BindingSpec{"com.victim.app", 10001, false});
    trace.bindings.push_back(BindingSpec{"com.mal.gingerbreak", 10052, false});

    auto& steps = trace.steps;
    steps.push_back(SpawnStep{"victim", "com.victim.app"});
    steps.push_back(SpawnStep{"mal", "com.mal.gingerbreak"});

    // Innocent bystander: foreground UI traffic and a library read,
    // nothing container-local. Its namespace must survive untouched.
    {
        SyscallStep open_libc = call("victim", SyscallKind::FileOpen);
        open_libc.path = "/system/lib/libc.so";
        steps.push_back(open_libc);
        steps.push_back(expect_host());

        SyscallStep ui = call("victim", SyscallKind::BinderIoctl);
        ui.service = "android.ui";
        steps.push_back(ui);
        steps.push_back(expect_host());
    }

    steps.push_back(AssertStep{"baseline", {}});

    // Stage 1: the exploit copies its own binary somewhere executable.
    steps.push_back(file_read("mal", "/proc/self/exe"));
    steps.push_back(expect_redirect());
    {
        SyscallStep copy = call("mal", SyscallKind::FileWrite);
        copy.path = kExploitCopy;
        copy.data = DataSpec::last_read();
        steps.push_back(copy);
        steps.push_back(expect_redirect());
    }

    // Stage 2: locate the volume daemon through netlink and procfs.
    steps.push_back(file_read("mal", "/proc/net/netlink"));
    steps.push_back(expect_redirect());
    steps.push_back(file_read("mal", "/proc/4/cmdline"));
    steps.push_back(expect_redirect());

    // Stage 3: offsets come from the shared system image, which stays
    // readable (and host-served) even for the attacker.
    steps.push_back(file_read("mal", "/system/lib/libc.so"));
    steps.push_back(expect_host());
    steps.push_back(file_read("mal", "/system/bin/vold"));
    steps.push_back(expect_host());

    // Stage 4: restart logging into a file the exploit can read back.
    steps.push_back(KillStep{"mal", "logcat"});
    steps.push_back(ForkStep{"mal", "logger"});
    steps.push_back(ExecStep{"logger",
                             "/system/bin/logcat",
                             {"logcat", "-f", kCrashLog}});

    // Stage 5: walk the negative index space. A replayed trace cannot
    // branch on the crash output, so every candidate is probed and the
    // log is collected after each shot; exactly one index lands on the
    // daemon's table entry and runs the copied binary as root.
    steps.push_back(call("mal", SyscallKind::SocketOp));
    steps.push_back(expect_redirect());
    for (int32_t index = 1; index <= 64; ++index) {
        SyscallStep probe = call("mal", SyscallKind::NetlinkSend);
        probe.data = DataSpec::vold_probe(-index, kExploitCopy);
        steps.push_back(probe);
        if (index == 1) steps.push_back(expect_redirect());
        steps.push_back(file_read("mal", kCrashLog));
    }

    steps.push_back(AssertStep{
        "confinement",
        {{"attacker", "mal"}, {"exploit", kExploitCopy}}});
    steps.push_back(AssertStep{"container_has_uid0", {{"actor", "mal"}}});

    return trace;
}

ScenarioTrace builtin_smoke() {
    ScenarioTrace trace;
    trace.name = "smoke";
    trace.seed = 7;
    trace.bindings.push_back(BindingSpec{"com.example.notes", 10010, false});

    auto& steps = trace.steps;
    steps.push_back(SpawnStep{"app", "com.example.notes"});
    steps.push_back(AssertStep{"baseline", {}});

    {
        SyscallStep write = call("app", SyscallKind::FileWrite);
        write.path = "/data/data/com.example.notes/notes.txt";
        write.data = DataSpec::text("groceries: coffee\n");
        steps.push_back(write);
        steps.push_back(expect_redirect());
    }
    steps.push_back(file_read("app", "/data/data/com.example.notes/notes.txt"));
    steps.push_back(expect_redirect());

    {
        SyscallStep ui = call("app", SyscallKind::BinderIoctl);
        ui.service = "android.ui";
        steps.push_back(ui);
        steps.push_back(expect_host());
    }
    steps.push_back(call("app", SyscallKind::GetPid));
    steps.push_back(expect_host());

    steps.push_back(AssertStep{
        "file_exists",
        {{"world", "app"}, {"path", "/data/data/com.example.notes/notes.txt"}}});
    steps.push_back(AssertStep{"host_rw_unchanged", {}});

    return trace;
}

std::vector<std::string> builtin_scenario_names() { return {"gingerbreak", "smoke"}; }

std::optional<ScenarioTrace> builtin_scenario(const std::string& name) {
    if (name == "gingerbreak") return builtin_gingerbreak();
    if (name == "smoke") return builtin_smoke();
    return std::nullopt;
}

}  // namespace redirsim
