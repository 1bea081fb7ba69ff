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

#include <doctest.h>

#include "redirsim/transport.hpp"

using namespace redirsim;

namespace {

ProcessDescriptor container_app() {
    ProcessDescriptor proc;
    proc.pid = 100;
    proc.uid = 10001;
    proc.vmid = Vmid::of(2);
    proc.proxy_pid = 9;
    proc.fds.emplace(7, RemoteHandle{7, 4, 100, Vmid::of(2)});
    proc.fds.emplace(8, RemoteHandle{8, 5, 100, Vmid::of(3)});  // foreign vmid
    return proc;
}

Marshaller::HandleResolver resolver_for(const ProcessDescriptor& proc) {
    return [&proc](int host_fd) -> std::optional<RemoteHandle> {
        auto it = proc.fds.find(host_fd);
        if (it == proc.fds.end()) return std::nullopt;
        const RemoteHandle* handle = std::get_if<RemoteHandle>(&it->second);
        if (!handle) return std::nullopt;
        return *handle;
    };
}

SyscallDesc write_call() {
    SyscallDesc desc;
    desc.kind = SyscallKind::FileWrite;
    desc.path = "/data/data/com.a/f";
    return desc;
}

}  // namespace

TEST_CASE("marshal assigns sequence numbers and maps handles") {
    ProcessDescriptor proc = container_app();
    Marshaller marshaller;

    MarshalledCall first = marshaller.marshal(proc, write_call(), "abc", {7},
                                              resolver_for(proc));
    CHECK(first.seq == 1);
    CHECK(first.vmid == Vmid::of(2));
    CHECK(first.caller_pid == 100);
    CHECK(first.data == "abc");
    CHECK(first.call.payload_len == 3);
    REQUIRE(first.handles.size() == 1);
    CHECK(first.handles[0] == 4);  // container-side fd, not the host fd

    MarshalledCall second = marshaller.marshal(proc, write_call(), "", {},
                                               resolver_for(proc));
    CHECK(second.seq == 2);
}

TEST_CASE("marshal rejects host callers and bad handles") {
    Marshaller marshaller;
    ProcessDescriptor proc = container_app();

    ProcessDescriptor host_proc = proc;
    host_proc.vmid = Vmid::host();
    CHECK_THROWS_AS(marshaller.marshal(host_proc, write_call(), "", {},
                                       resolver_for(host_proc)),
                    SimError);

    CHECK_THROWS_AS(marshaller.marshal(proc, write_call(), "", {99},
                                       resolver_for(proc)),
                    SimError);
    // fd 8 resolves but belongs to container 3, not the caller's 2.
    CHECK_THROWS_AS(marshaller.marshal(proc, write_call(), "", {8},
                                       resolver_for(proc)),
                    SimError);

    try {
        marshaller.marshal(proc, write_call(), "", {8}, resolver_for(proc));
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::BadHandle);
    }
}

TEST_CASE("dispatch accounting per wait mode") {
    ProcessDescriptor proc = container_app();
    Marshaller marshaller;
    Dispatcher dispatcher;
    auto executor = [](const MarshalledCall&) { return CallResult{}; };

    for (int i = 0; i < 10; ++i) {
        MarshalledCall call =
            marshaller.marshal(proc, write_call(), "x", {}, resolver_for(proc));
        dispatcher.dispatch(call, WaitMode::KernelSleep, executor);
    }
    SwitchCounter kernel = dispatcher.counter();
    CHECK(kernel.calls_redirected == 10);
    CHECK(kernel.vm_switches == 20);
    CHECK(kernel.context_switches == 20);
    CHECK(kernel.table_indirections == 0);

    dispatcher.reset();
    for (int i = 0; i < 10; ++i) {
        MarshalledCall call =
            marshaller.marshal(proc, write_call(), "x", {}, resolver_for(proc));
        dispatcher.dispatch(call, WaitMode::NaiveUserspace, executor);
    }
    SwitchCounter naive = dispatcher.counter();
    CHECK(naive.calls_redirected == 10);
    CHECK(naive.vm_switches == 20);
    CHECK(naive.context_switches == 40);

    // The only difference between the two wait strategies is two extra
    // context switches per redirected call.
    CHECK(naive.context_switches - kernel.context_switches ==
          2 * kernel.calls_redirected);
}

TEST_CASE("host calls cost one table lookup and no switches") {
    Dispatcher dispatcher;
    for (int i = 0; i < 5; ++i) {
        CallResult result = dispatcher.null_redirect([] {
            CallResult r;
            r.retval = 42;
            return r;
        });
        CHECK(result.retval == 42);
    }
    SwitchCounter counter = dispatcher.counter();
    CHECK(counter.calls_host == 5);
    CHECK(counter.table_indirections == 5);
    CHECK(counter.vm_switches == 0);
    CHECK(counter.context_switches == 0);
    CHECK(counter.calls_redirected == 0);

    dispatcher.count_denied();
    CHECK(dispatcher.counter().calls_denied == 1);
}

TEST_CASE("dispatch enforces per-caller sequence order") {
    ProcessDescriptor proc = container_app();
    Marshaller marshaller;
    Dispatcher dispatcher;
    auto executor = [](const MarshalledCall&) { return CallResult{}; };

    MarshalledCall first = marshaller.marshal(proc, write_call(), "", {},
                                              resolver_for(proc));
    MarshalledCall second = marshaller.marshal(proc, write_call(), "", {},
                                               resolver_for(proc));
    dispatcher.dispatch(second, WaitMode::KernelSleep, executor);
    // Replaying an older sequence number for the same caller is refused.
    CHECK_THROWS_AS(dispatcher.dispatch(first, WaitMode::KernelSleep, executor),
                    SimError);

    // A different caller in another container keeps its own ordering.
    ProcessDescriptor other = container_app();
    other.pid = 555;
    other.vmid = Vmid::of(3);
    other.fds.clear();
    MarshalledCall third = marshaller.marshal(other, write_call(), "", {},
                                              resolver_for(other));
    CHECK_NOTHROW(dispatcher.dispatch(third, WaitMode::KernelSleep, executor));
}

TEST_CASE("results flag the return path") {
    ProcessDescriptor proc = container_app();
    Marshaller marshaller;
    Dispatcher dispatcher;

    MarshalledCall call = marshaller.marshal(proc, write_call(), "", {},
                                             resolver_for(proc));
    CallResult lean = dispatcher.dispatch(call, WaitMode::KernelSleep,
                                          [](const MarshalledCall&) {
                                              CallResult r;
                                              r.retval = 0;
                                              return r;
                                          });
    CHECK(lean.via_hypercall);  // no payload, fast return path

    MarshalledCall bulky = marshaller.marshal(proc, write_call(), "", {},
                                              resolver_for(proc));
    CallResult with_data = dispatcher.dispatch(bulky, WaitMode::KernelSleep,
                                               [](const MarshalledCall&) {
                                                   CallResult r;
                                                   r.out_data = "file contents";
                                                   return r;
                                               });
    CHECK(!with_data.via_hypercall);  // rides the shared ring
    CHECK(with_data.seq == bulky.seq);
}

TEST_CASE("switch counters accumulate") {
    SwitchCounter a;
    a.vm_switches = 2;
    a.context_switches = 4;
    a.calls_redirected = 1;
    SwitchCounter b = a;
    b += a;
    CHECK(b.vm_switches == 4);
    CHECK(b.context_switches == 8);
    CHECK(b.calls_redirected == 2);
    CHECK(b == b);
    CHECK(!(a == b));
}
