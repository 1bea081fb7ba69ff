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

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "redirsim/builtin_scenarios.hpp"
#include "redirsim/engine.hpp"
#include "redirsim/image.hpp"
#include "redirsim/workload.hpp"

namespace {

using namespace redirsim;

constexpr int kExitOk = 0;
constexpr int kExitAssertionFailed = 1;
constexpr int kExitConfigError = 2;

struct RunArgs {
    std::string scenario_file;
    std::string builtin;
    std::string policy = "builtin";
    std::string wait_mode = "kernel";
    std::optional<uint64_t> seed;
    std::string image_dir;
    std::string out_file;
    std::string wire_file;
    int threads = 1;
    int memory_mb = kDefaultGuestMemoryMb;
};

void write_file_or_die(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw SimError(ErrorCode::ConfigError, "cannot write " + path);
    }
    out << bytes;
}

ScenarioTrace load_trace(const RunArgs& args) {
    if (!args.builtin.empty() && !args.scenario_file.empty()) {
        throw SimError(ErrorCode::ConfigError,
                       "pass a scenario file or --builtin, not both");
    }
    if (!args.builtin.empty()) {
        std::optional<ScenarioTrace> trace = builtin_scenario(args.builtin);
        if (!trace) {
            std::string names;
            for (const std::string& name : builtin_scenario_names()) {
                names += (names.empty() ? "" : ", ") + name;
            }
            throw SimError(ErrorCode::ConfigError,
                           "unknown builtin scenario '" + args.builtin +
                               "' (available: " + names + ")");
        }
        return *std::move(trace);
    }
    if (args.scenario_file.empty()) {
        throw SimError(ErrorCode::ConfigError, "no scenario given (file or --builtin)");
    }
    return trace_from_file(args.scenario_file);
}

EngineConfig make_config(const RunArgs& args, int threads) {
    EngineConfig config;
    config.policy = make_policy(args.policy);
    std::optional<WaitMode> mode = wait_mode_from_string(args.wait_mode);
    if (!mode) {
        throw SimError(ErrorCode::ConfigError,
                       "wait mode must be 'kernel' or 'naive', got " + args.wait_mode);
    }
    config.wait_mode = *mode;
    config.threads = threads;
    config.guest_memory_mb = args.memory_mb;
    if (!args.image_dir.empty()) config.host_image = load_host_image(args.image_dir);
    config.record_wire = !args.wire_file.empty();
    return config;
}

void print_summary(const ScenarioReport& report) {
    std::printf("scenario  %s (seed %llu, policy %s, wait %s, threads %d)\n",
                report.name.c_str(),
                static_cast<unsigned long long>(report.seed), report.policy.c_str(),
                report.wait_mode.c_str(), report.threads);
    std::printf("calls     host %llu, redirected %llu, denied %llu\n",
                static_cast<unsigned long long>(report.counters.calls_host),
                static_cast<unsigned long long>(report.counters.calls_redirected),
                static_cast<unsigned long long>(report.counters.calls_denied));
    std::printf("switches  vm %llu, context %llu, table lookups %llu\n",
                static_cast<unsigned long long>(report.counters.vm_switches),
                static_cast<unsigned long long>(report.counters.context_switches),
                static_cast<unsigned long long>(report.counters.table_indirections));
    for (const AssertionOutcome& a : report.assertions) {
        std::printf("assert    [%s] %s%s%s\n", a.pass ? "ok" : "FAIL", a.id.c_str(),
                    a.detail.empty() ? "" : ": ", a.detail.c_str());
    }
    size_t failed = report.failed_assertions();
    std::printf("result    %zu/%zu assertions passed\n",
                report.assertions.size() - failed, report.assertions.size());
}

/// Report equality across engine modes, ignoring the thread count the
/// report self-describes.
bool equivalent_reports(ScenarioReport a, ScenarioReport b) {
    a.threads = 1;
    b.threads = 1;
    return a.to_json_text() == b.to_json_text();
}

int cmd_run(const RunArgs& args) {
    ScenarioTrace trace = load_trace(args);
    if (args.seed) trace.seed = *args.seed;

    Engine engine(trace, make_config(args, args.threads));
    ScenarioReport report = engine.run();

    if (args.threads > 1) {
        // The parallel engine must not change observable behavior;
        // cross-check against a fresh single-threaded replay.
        ScenarioReport single = run_scenario(trace, make_config(args, 1));
        if (!equivalent_reports(report, single)) {
            std::fprintf(stderr,
                         "error: threaded run diverged from single-threaded replay\n");
            return kExitConfigError;
        }
    }

    print_summary(report);
    if (!args.out_file.empty()) write_file_or_die(args.out_file, report.to_json_text());
    if (!args.wire_file.empty()) write_file_or_die(args.wire_file, engine.wire_capture());
    return report.all_assertions_passed() ? kExitOk : kExitAssertionFailed;
}

ScenarioTrace synthetic_calls(size_t n, bool redirected) {
    ScenarioTrace trace;
    trace.name = redirected ? "bench-redirected" : "bench-host";
    trace.seed = 1;
    trace.bindings.push_back(BindingSpec{"com.bench.app", 10200, false});
    trace.steps.push_back(SpawnStep{"app", "com.bench.app"});
    for (size_t i = 0; i < n; ++i) {
        SyscallStep step;
        step.actor = "app";
        if (redirected) {
            step.kind = SyscallKind::FileWrite;
            step.path = "/data/data/com.bench.app/scratch";
            step.data = DataSpec::text("0123456789abcdef0123456789abcdef");
        } else {
            step.kind = SyscallKind::GetPid;
        }
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

int cmd_bench(size_t n, const std::string& policy_spec) {
    struct Row {
        const char* workload;
        const char* mode;
        SwitchCounter counters;
        double millis;
    };
    std::vector<Row> rows;
    SwitchCounter by_mode[2];

    for (bool redirected : {true, false}) {
        ScenarioTrace trace = synthetic_calls(n, redirected);
        for (WaitMode mode : {WaitMode::KernelSleep, WaitMode::NaiveUserspace}) {
            EngineConfig config;
            config.policy = make_policy(policy_spec);
            config.wait_mode = mode;
            auto started = std::chrono::steady_clock::now();
            ScenarioReport report = run_scenario(trace, std::move(config));
            auto elapsed = std::chrono::steady_clock::now() - started;
            double millis =
                std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(
                    elapsed)
                    .count();
            rows.push_back(Row{redirected ? "redirected-write" : "host-getpid",
                               mode == WaitMode::KernelSleep ? "kernel" : "naive",
                               report.counters, millis});
            by_mode[mode == WaitMode::KernelSleep ? 0 : 1] += report.counters;
        }
    }

    std::printf("%-18s %-7s %10s %10s %12s %12s %12s\n", "workload", "mode", "calls",
                "redirected", "vm_switches", "ctx_switches", "indirections");
    for (const Row& row : rows) {
        uint64_t calls = row.counters.calls_host + row.counters.calls_redirected +
                         row.counters.calls_denied;
        std::printf("%-18s %-7s %10llu %10llu %12llu %12llu %12llu\n", row.workload,
                    row.mode, static_cast<unsigned long long>(calls),
                    static_cast<unsigned long long>(row.counters.calls_redirected),
                    static_cast<unsigned long long>(row.counters.vm_switches),
                    static_cast<unsigned long long>(row.counters.context_switches),
                    static_cast<unsigned long long>(row.counters.table_indirections));
    }
    for (const Row& row : rows) {
        std::printf("wall-clock %-18s %-7s %.2f ms (non-normative)\n", row.workload,
                    row.mode, row.millis);
    }

    uint64_t delta = by_mode[1].context_switches - by_mode[0].context_switches;
    uint64_t expected = 2 * by_mode[0].calls_redirected;
    bool holds = delta == expected &&
                 by_mode[0].calls_redirected == by_mode[1].calls_redirected &&
                 by_mode[0].vm_switches == by_mode[1].vm_switches;
    std::printf("mode delta: ctx(naive) - ctx(kernel) = %llu, 2 x redirected = %llu -> %s\n",
                static_cast<unsigned long long>(delta),
                static_cast<unsigned long long>(expected),
                holds ? "exact" : "MISMATCH");
    return holds ? kExitOk : kExitAssertionFailed;
}

int cmd_meminfo(int memory_mb, int containers) {
    ContainerConfig probe;
    probe.vmid = Vmid::of(1);
    probe.memory_mb = memory_mb;
    validate_container_config(probe);
    double ratio = kHeadlessActiveMb / kStockActiveMb;
    std::printf("stock full stack        %.2f MB (modeled)\n", kStockActiveMb);
    std::printf("headless container base %.2f MB (modeled)\n", kHeadlessActiveMb);
    std::printf("headless/stock ratio    %.3f\n", ratio);
    std::printf("guest RAM per container %d MB (min %d, default %d)\n", memory_mb,
                kMinGuestMemoryMb, kDefaultGuestMemoryMb);
    std::printf("containers configured   %d, guest RAM total %d MB\n", containers,
                containers * memory_mb);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Syscall-redirection container simulator"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Replay a scenario trace");
    run->add_option("scenario", run_args.scenario_file, "Scenario JSON file");
    run->add_option("--builtin", run_args.builtin, "Built-in scenario name");
    run->add_option("--policy", run_args.policy,
                    "Routing policy: builtin, passthrough, or a rule file");
    run->add_option("--wait-mode", run_args.wait_mode, "Proxy wait mode: kernel|naive");
    run->add_option("--seed", run_args.seed, "Override the trace seed");
    run->add_option("--image", run_args.image_dir, "Host image directory");
    run->add_option("--out", run_args.out_file, "Write the JSON report here");
    run->add_option("--record-wire", run_args.wire_file,
                    "Capture marshalled calls to this file");
    run->add_option("--threads", run_args.threads, "Container worker threads")
        ->check(CLI::Range(1, 64));
    run->add_option("--memory-mb", run_args.memory_mb, "Guest RAM per container");

    size_t bench_n = 1000;
    std::string bench_policy = "builtin";
    CLI::App* bench = app.add_subcommand("bench", "Switch-accounting comparison");
    bench->add_option("--n", bench_n, "Calls per workload");
    bench->add_option("--policy", bench_policy, "Routing policy for the bench run");

    int mem_mb = kDefaultGuestMemoryMb;
    int mem_containers = 1;
    CLI::App* meminfo = app.add_subcommand("meminfo", "Modeled memory footprint");
    meminfo->add_option("--memory-mb", mem_mb, "Guest RAM per container");
    meminfo->add_option("--containers", mem_containers, "Container count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (bench->parsed()) {
            if (bench_n == 0) {
                std::fprintf(stderr, "error: --n must be positive\n");
                return kExitConfigError;
            }
            return cmd_bench(bench_n, bench_policy);
        }
        return cmd_meminfo(mem_mb, mem_containers);
    } catch (const SimError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    }
}
