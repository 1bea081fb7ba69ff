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

#include <cerrno>
#include <filesystem>
#include <fstream>

#include "redirsim/image.hpp"
#include "redirsim/system.hpp"

using namespace redirsim;

namespace {

System::Options two_app_options() {
    System::Options opts;
    opts.host_image = builtin_host_image();
    opts.bindings = {{"com.a", 10001, false}, {"com.b", 10002, false}};
    opts.seed = 99;
    return opts;
}

MarshalledCall remote(System& sys, const ProcessDescriptor& proc, Marshaller& m,
                      const SyscallDesc& desc, std::string data = {},
                      std::vector<int> handle_args = {}) {
    return m.marshal(proc, desc, std::move(data), handle_args,
                     sys.handle_resolver(proc.pid));
}

SyscallDesc file_desc(SyscallKind kind, const char* path, bool writable = false) {
    SyscallDesc desc;
    desc.kind = kind;
    desc.path = path;
    desc.writable = writable;
    return desc;
}

}  // namespace

TEST_CASE("worlds boot the same daemon layout") {
    FileTree image = builtin_host_image();
    World world(Vmid::of(1), &image, 7);

    CHECK(world.find(1)->name == "init");
    CHECK(world.find(2)->name == "zygote");
    CHECK(world.find(4)->name == "vold");
    CHECK(world.find(4)->uid == 0);
    CHECK(world.vold().pid == 4);
    CHECK(world.logcat().pid == 5);
    CHECK(world.binder_endpoint("android.ui").has_value());
    CHECK(!world.binder_endpoint("no.such.service").has_value());

    // The daemon layout is identical across namespaces, so procfs-based
    // discovery inside a container finds the same pids as on a host.
    World host(Vmid::host(), &image, 7);
    CHECK(host.find(4)->name == "vold");
}

TEST_CASE("procfs surfaces identity and netlink registry") {
    FileTree image = builtin_host_image();
    World world(Vmid::of(1), &image, 3);
    Pid app = world.spawn(10001, "app", "/data/app/com.a/base.apk", "APPBYTES",
                          {"com.a"}, ProcOrigin::Scenario);

    World::ReadResult exe = world.read_file(app, "/proc/self/exe");
    CHECK(exe.err == 0);
    CHECK(exe.data == "APPBYTES");

    World::ReadResult cmdline = world.read_file(app, "/proc/4/cmdline");
    CHECK(cmdline.err == 0);
    CHECK(cmdline.data.find("vold") != std::string::npos);

    World::ReadResult netlink = world.read_file(app, "/proc/net/netlink");
    CHECK(netlink.err == 0);
    CHECK(netlink.data.find(" 4 ") != std::string::npos);  // vold's socket row

    CHECK(world.read_file(app, "/proc/9999/cmdline").err == ENOENT);
    CHECK(world.write_file("/proc/4/cmdline", "x") == EACCES);
}

TEST_CASE("open semantics") {
    FileTree image = builtin_host_image();
    World world(Vmid::of(1), &image, 3);
    Pid app = world.spawn(10001, "app", "/a", "b", {}, ProcOrigin::Scenario);

    CHECK(world.check_open(app, "/system/bin/sh", false) == 0);
    CHECK(world.check_open(app, "/system/bin/sh", true) == EACCES);
    CHECK(world.check_open(app, "/data/local/tmp/new", true) == 0);  // creates
    CHECK(world.file_exists("/data/local/tmp/new"));
    CHECK(world.check_open(app, "/no/such/dir/file", true) == ENOENT);
    CHECK(world.check_open(app, "/data/local/tmp/missing", false) == ENOENT);
    CHECK(world.read_file(app, "/data").err == EISDIR);
    CHECK(world.check_open(app, "/dev/random", false) == 0);

    int fd = world.open_fd(app, "/data/local/tmp/new", false);
    CHECK(fd >= 3);
    CHECK(world.open_count(app) == 1);
    CHECK(world.fd_for_path(app, "/data/local/tmp/new") == fd);
    CHECK(world.close_fd(app, fd));
    CHECK(!world.close_fd(app, fd));
    CHECK(world.open_count(app) == 0);
}

TEST_CASE("vold control messages") {
    FileTree image = builtin_host_image();
    World world(Vmid::of(2), &image, 1911);

    std::string encoded = encode_vold_message(-5, "/data/local/tmp/sh");
    std::optional<VoldMessage> decoded = decode_vold_message(encoded);
    REQUIRE(decoded.has_value());
    CHECK(decoded->index == -5);
    CHECK(decoded->exec_path == "/data/local/tmp/sh");
    CHECK(!decode_vold_message("junk").has_value());

    const int32_t secret = world.vold().secret_index;
    CHECK(secret < 0);
    CHECK(secret >= -64);

    CHECK(world.vold_message("garbage").err == EINVAL);
    CHECK(world.vold_message(encode_vold_message(3, "/x")).err == 0);

    // Crash lines land in the log only once a file-backed logcat runs.
    CHECK(world.restart_logcat("/data/local/tmp/crash.log") == 0);
    int32_t wrong = secret == -7 ? -8 : -7;
    World::VoldOutcome miss = world.vold_message(encode_vold_message(wrong, "/x"));
    CHECK(miss.err == 0);
    CHECK(miss.crash_logged);
    World::ReadResult log = world.read_file(1, "/data/local/tmp/crash.log");
    CHECK(log.data.find("volume index " + std::to_string(wrong)) != std::string::npos);

    // Hitting the secret index without the payload in place only logs.
    World::VoldOutcome absent =
        world.vold_message(encode_vold_message(secret, "/data/local/tmp/ghost"));
    CHECK(!absent.spawned.has_value());

    // With the payload staged, the daemon execs it with its own uid: 0.
    CHECK(world.write_file("/data/local/tmp/sh", "ELFPAYLOAD") == 0);
    World::VoldOutcome hit =
        world.vold_message(encode_vold_message(secret, "/data/local/tmp/sh"));
    REQUIRE(hit.spawned.has_value());
    const WorldProcess* payload = world.find(*hit.spawned);
    REQUIRE(payload != nullptr);
    CHECK(payload->uid == 0);
    CHECK(payload->origin == ProcOrigin::Scenario);

    // A dead daemon refuses connections.
    world.kill(world.vold().pid);
    CHECK(world.vold_message(encode_vold_message(secret, "/x")).err == ECONNREFUSED);
}

TEST_CASE("secret index depends on seed and namespace") {
    FileTree image = builtin_host_image();
    World a1(Vmid::of(1), &image, 42);
    World a2(Vmid::of(1), &image, 42);
    World b(Vmid::of(2), &image, 42);
    World c(Vmid::of(1), &image, 43);

    CHECK(a1.vold().secret_index == a2.vold().secret_index);
    // Different namespaces or seeds draw independently; equality is
    // possible but these particular draws differ.
    bool varies = a1.vold().secret_index != b.vold().secret_index ||
                  a1.vold().secret_index != c.vold().secret_index;
    CHECK(varies);
}

TEST_CASE("system boots one container per bound uid") {
    System sys(two_app_options());
    CHECK(sys.container_vmids().size() == 2);
    CHECK(sys.has_container(Vmid::of(1)));
    CHECK(sys.has_container(Vmid::of(2)));
    CHECK(!sys.has_container(Vmid::of(3)));

    // Packages land in the shared image and private data dirs exist.
    CHECK(sys.host_ro().has_file("/data/app/com.a/base.apk"));
    CHECK(sys.container(Vmid::of(1)).rw().has_dir("/data/data/com.a"));

    ProcessDescriptor& a = sys.zygote_spawn("com.a");
    CHECK(a.uid == 10001);
    CHECK(a.vmid == Vmid::of(1));
    REQUIRE(a.proxy_pid.has_value());
    const WorldProcess* proxy = sys.container(Vmid::of(1)).find(*a.proxy_pid);
    REQUIRE(proxy != nullptr);
    CHECK(proxy->mirrors_host_pid == a.pid);

    CHECK_THROWS_AS(sys.zygote_spawn("com.not.declared"), SimError);
}

TEST_CASE("fork inherits the container and duplicates remote handles") {
    System sys(two_app_options());
    ProcessDescriptor& parent = sys.zygote_spawn("com.a");
    Marshaller m;

    MarshalledCall open = remote(sys, parent, m,
                                 file_desc(SyscallKind::FileOpen,
                                           "/data/data/com.a/state", true));
    CallResult opened = sys.execute_in_container(open);
    REQUIRE(opened.ok());
    REQUIRE(opened.handle.has_value());
    const int parent_host_fd = opened.handle->host_fd;
    const int parent_cfd = opened.handle->container_fd;

    ProcessDescriptor& child = sys.do_fork(parent.pid);
    CHECK(child.vmid == parent.vmid);
    CHECK(child.uid == parent.uid);
    CHECK(child.parent_pid == parent.pid);
    REQUIRE(child.proxy_pid.has_value());
    CHECK(child.proxy_pid != parent.proxy_pid);

    // The child sees the same host fd numbering, but its container-side
    // descriptor is a fresh open owned by the child's proxy.
    auto it = child.fds.find(parent_host_fd);
    REQUIRE(it != child.fds.end());
    const RemoteHandle& dup = std::get<RemoteHandle>(it->second);
    CHECK(dup.container_fd != parent_cfd);
    CHECK(dup.owner_pid == child.pid);
    CHECK(sys.container(Vmid::of(1)).open_path(dup.container_fd) ==
          std::string("/data/data/com.a/state"));
}

TEST_CASE("execve stages container binaries through the cache") {
    System sys(two_app_options());
    ProcessDescriptor& app = sys.zygote_spawn("com.a");
    Marshaller m;

    // System binaries come straight from the shared image.
    ExecOutcome shell = sys.do_execve(app.pid, "/system/bin/sh", {"sh"});
    CHECK(shell.source == ExecOutcome::Source::HostImage);
    CHECK(!shell.cache_path.has_value());

    // A binary the app wrote lives in its container; executing it goes
    // through the host-held cache, under a per-container root.
    MarshalledCall write = remote(sys, app, m,
                                  file_desc(SyscallKind::FileWrite,
                                            "/data/local/tmp/tool"),
                                  "TOOLBYTES");
    REQUIRE(sys.execute_in_container(write).ok());
    ExecOutcome tool = sys.do_execve(app.pid, "/data/local/tmp/tool", {"tool"});
    CHECK(tool.source == ExecOutcome::Source::ExecCache);
    REQUIRE(tool.cache_path.has_value());
    CHECK(tool.cache_path->rfind("/vm1/", 0) == 0);
    CHECK(sys.exec_cache().has_file(*tool.cache_path));

    // The cache is host-only state: it is not visible in any world.
    CHECK(!sys.container(Vmid::of(1)).file_exists(*tool.cache_path));
    CHECK(!sys.host_world().file_exists(*tool.cache_path));

    // Executing something that is not there fails cleanly.
    CHECK_THROWS_AS(sys.do_execve(app.pid, "/data/local/tmp/ghost", {}), SimError);
}

TEST_CASE("exec cannot escape the cache root") {
    System sys(two_app_options());
    ProcessDescriptor& app = sys.zygote_spawn("com.a");
    try {
        sys.do_execve(app.pid, "../../vm2/boom", {});
        CHECK(false);
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::CacheViolation);
    }
}

TEST_CASE("kill respects container boundaries") {
    System sys(two_app_options());
    ProcessDescriptor& a = sys.zygote_spawn("com.a");
    ProcessDescriptor& b = sys.zygote_spawn("com.b");

    // Cross-container kills are refused outright.  This runs before any
    // fork so b's host pid has no numeric twin in a's guest namespace.
    CHECK(sys.kill_process(a.pid, b.pid) == EPERM);
    CHECK(sys.find_process(b.pid)->alive);

    // Same container: allowed, and the proxy dies with the app.
    ProcessDescriptor& a2 = sys.do_fork(a.pid);
    Pid a2_proxy = a2.proxy_pid.value();
    CHECK(sys.kill_process(a.pid, a2.pid) == 0);
    CHECK(!sys.find_process(a2.pid)->alive);
    CHECK(!sys.container(Vmid::of(1)).find(a2_proxy)->alive);
    CHECK(sys.kill_process(a.pid, a2.pid) == ESRCH);

    // Host root can kill anyone.
    CHECK(sys.kill_process(1, b.pid) == 0);
    CHECK(!sys.find_process(b.pid)->alive);
}

TEST_CASE("containerized kill resolves pids in the guest namespace") {
    System sys(two_app_options());
    ProcessDescriptor& a = sys.zygote_spawn("com.a");
    World& guest = sys.container(Vmid::of(1));

    Pid guest_logcat = guest.logcat().pid;
    CHECK(guest.find(guest_logcat)->alive);
    CHECK(sys.kill_process(a.pid, guest_logcat) == 0);
    CHECK(!guest.find(guest_logcat)->alive);
    CHECK(!guest.logcat().alive);

    // The same number on the host still names the boot logcat there.
    CHECK(sys.host_world().find(guest_logcat)->alive);
}

TEST_CASE("shared segments stay within one container") {
    System sys(two_app_options());
    ProcessDescriptor& a = sys.zygote_spawn("com.a");
    ProcessDescriptor& b = sys.zygote_spawn("com.b");
    ProcessDescriptor& a2 = sys.do_fork(a.pid);

    int segment = sys.create_segment(a.pid, 4096);
    CHECK(sys.find_segment(segment) != nullptr);
    CHECK(sys.find_segment(segment)->size_bytes == 4096);

    SyscallDesc intent;
    intent.kind = SyscallKind::BinderIoctl;

    intent.target_pid = a2.pid;
    CallResult same = sys.execute_on_host(a.pid, intent, "", segment);
    CHECK(same.ok());

    intent.target_pid = b.pid;
    CallResult cross = sys.execute_on_host(a.pid, intent, "", segment);
    CHECK(cross.sim_errno == EPERM);

    // Host delivery of a dead target reports ESRCH.
    sys.kill_process(a.pid, a2.pid);
    intent.target_pid = a2.pid;
    CHECK(sys.execute_on_host(a.pid, intent, "", segment).sim_errno == ESRCH);
}

TEST_CASE("remote reads and writes hit the caller's world only") {
    System sys(two_app_options());
    ProcessDescriptor& a = sys.zygote_spawn("com.a");
    ProcessDescriptor& b = sys.zygote_spawn("com.b");
    Marshaller m;

    MarshalledCall write = remote(sys, a, m,
                                  file_desc(SyscallKind::FileWrite,
                                            "/data/data/com.a/secret"),
                                  "a-private");
    REQUIRE(sys.execute_in_container(write).ok());

    MarshalledCall read_own = remote(sys, a, m,
                                     file_desc(SyscallKind::FileRead,
                                               "/data/data/com.a/secret"));
    CallResult own = sys.execute_in_container(read_own);
    CHECK(own.ok());
    CHECK(own.out_data == "a-private");

    MarshalledCall read_foreign = remote(sys, b, m,
                                         file_desc(SyscallKind::FileRead,
                                                   "/data/data/com.a/secret"));
    CallResult foreign = sys.execute_in_container(read_foreign);
    CHECK(foreign.sim_errno == ENOENT);

    CHECK(!sys.host_world().rw().has_file("/data/data/com.a/secret"));
}

TEST_CASE("proxy death fails fast") {
    System sys(two_app_options());
    ProcessDescriptor& a = sys.zygote_spawn("com.a");
    Marshaller m;
    MarshalledCall call = remote(sys, a, m,
                                 file_desc(SyscallKind::FileRead, "/proc/self/exe"));
    sys.container(Vmid::of(1)).kill(a.proxy_pid.value());
    try {
        sys.execute_in_container(call);
        CHECK(false);
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::ProxyDead);
    }
}

TEST_CASE("guest memory floor applies at boot") {
    System::Options opts = two_app_options();
    opts.guest_memory_mb = kMinGuestMemoryMb - 1;
    CHECK_THROWS_AS(System{std::move(opts)}, SimError);

    System::Options ok = two_app_options();
    ok.guest_memory_mb = kMinGuestMemoryMb;
    CHECK_NOTHROW(System{std::move(ok)});
}

TEST_CASE("image loading from a directory snapshot") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "redirsim_image_test";
    fs::remove_all(dir);
    fs::create_directories(dir / "system/bin");
    {
        std::ofstream out(dir / "system/bin/sh", std::ios::binary);
        out << "shell-bytes";
    }

    FileTree tree = load_host_image(dir.string());
    CHECK(tree.has_file("/system/bin/sh"));
    CHECK(*tree.read("/system/bin/sh") == "shell-bytes");

    fs::remove_all(dir);
    CHECK_THROWS_AS(load_host_image((dir / "gone").string()), SimError);
}
