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

#include "redirsim/world.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstdio>

#include "redirsim/image.hpp"
#include "redirsim/policy.hpp"

namespace redirsim {

namespace {

constexpr std::array<const char*, 13> kDeviceNodes = {
    "/dev/binder", "/dev/ashmem", "/dev/null", "/dev/zero",
    "/dev/random", "/dev/urandom", "/dev/tty0", "/dev/ptmx",
    "/dev/graphics/fb0", "/dev/input/event0", "/dev/log/main", "/dev/log/events",
    "/dev/log/radio",
};

constexpr std::array<const char*, 4> kDeviceDirs = {
    "/dev", "/dev/graphics", "/dev/input", "/dev/log",
};

// Every service-manager name known to the simulated stack. All of them
// terminate in the system server process.
constexpr std::array<const char*, 21> kBinderServiceNames = {
    "android.ui", "android.view", "com.android.internal.view",
    "window", "input", "display",
    "notification", "android.app.INotificationManager",
    "android.app", "android.content", "android.utils", "android.os",
    "com.android.internal.telephony", "android.media", "android.net",
    "android.accounts", "ImountService",
    "activity", "package", "location", "contacts",
};

std::string parent_of(const std::string& path) {
    size_t slash = path.find_last_of('/');
    if (slash == std::string::npos || slash == 0) return "/";
    return path.substr(0, slash);
}

std::string basename_of(const std::string& path) {
    size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

void put_le32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (i * 8)) & 0xff));
}

}  // namespace

std::string encode_vold_message(int32_t index, std::string_view exec_path) {
    std::string out;
    put_le32(out, static_cast<uint32_t>(index));
    put_le32(out, static_cast<uint32_t>(exec_path.size()));
    out.append(exec_path);
    return out;
}

std::optional<VoldMessage> decode_vold_message(std::string_view bytes) {
    if (bytes.size() < 8) return std::nullopt;
    auto le32 = [&](size_t at) {
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(bytes[at + i]);
        return v;
    };
    VoldMessage msg;
    msg.index = static_cast<int32_t>(le32(0));
    uint32_t len = le32(4);
    if (bytes.size() != 8u + len) return std::nullopt;
    msg.exec_path = std::string(bytes.substr(8, len));
    return msg;
}

World::World(Vmid vmid, const FileTree* ro, uint64_t seed)
    : vmid_(vmid), ro_(ro), seed_(seed) {
    boot();
}

void World::boot() {
    auto image_of = [&](const std::string& path) {
        const std::string* bytes = ro_->read(path);
        return bytes ? *bytes : synthesize_binary(path);
    };

    plain_spawn(0, "init", "/init", image_of("/init"), {"/init"}, ProcOrigin::Boot);
    plain_spawn(0, "zygote", "/system/bin/app_process",
                image_of("/system/bin/app_process"), {"zygote"}, ProcOrigin::Boot);
    plain_spawn(0, "servicemanager", "/system/bin/servicemanager",
                image_of("/system/bin/servicemanager"), {"/system/bin/servicemanager"},
                ProcOrigin::Boot);
    Pid vold_pid = plain_spawn(0, "vold", "/system/bin/vold", image_of("/system/bin/vold"),
                               {"/system/bin/vold"}, ProcOrigin::Boot);
    Pid logcat_pid = plain_spawn(0, "logcat", "/system/bin/logcat",
                                 image_of("/system/bin/logcat"), {"/system/bin/logcat"},
                                 ProcOrigin::Boot);
    Pid server_pid = plain_spawn(1000, "system_server", "/system/bin/system_server",
                                 image_of("/system/bin/system_server"), {"system_server"},
                                 ProcOrigin::Boot);

    vold_.pid = vold_pid;
    vold_.secret_index =
        -static_cast<int32_t>(1 + (splitmix64(seed_ ^ (0x51ed2701u * (vmid_.value() + 1))) % 64));
    logcat_.pid = logcat_pid;

    netlink_["uevent"] = 1;
    netlink_["vold"] = vold_pid;
    for (const char* name : kBinderServiceNames) binder_services_[name] = server_pid;
}

Pid World::plain_spawn(Uid uid, const std::string& name, const std::string& image_path,
                       const std::string& image_bytes, std::vector<std::string> argv,
                       ProcOrigin origin) {
    WorldProcess proc;
    proc.pid = next_pid_++;
    proc.uid = uid;
    proc.name = name;
    proc.image_path = image_path;
    proc.image_bytes = image_bytes;
    proc.argv = argv.empty() ? std::vector<std::string>{name} : std::move(argv);
    proc.origin = origin;
    procs_.push_back(std::move(proc));
    return procs_.back().pid;
}

Pid World::hook_spawn(Uid uid, const std::string& name, const std::string& image_path,
                      const std::string& image_bytes, std::vector<std::string> argv) {
    if (spawn_hook_) return spawn_hook_(uid, name, image_path, image_bytes, std::move(argv));
    return plain_spawn(uid, name, image_path, image_bytes, std::move(argv),
                       ProcOrigin::Scenario);
}

Pid World::spawn(Uid uid, const std::string& name, const std::string& image_path,
                 const std::string& image_bytes, std::vector<std::string> argv,
                 ProcOrigin origin, std::optional<Pid> mirrors) {
    Pid pid = plain_spawn(uid, name, image_path, image_bytes, std::move(argv), origin);
    procs_.back().mirrors_host_pid = mirrors;
    return pid;
}

WorldProcess* World::find(Pid pid) {
    for (auto& proc : procs_) {
        if (proc.pid == pid) return &proc;
    }
    return nullptr;
}

const WorldProcess* World::find(Pid pid) const {
    return const_cast<World*>(this)->find(pid);
}

bool World::kill(Pid pid) {
    WorldProcess* proc = find(pid);
    if (!proc || !proc->alive) return false;
    proc->alive = false;

    for (auto it = open_files_.begin(); it != open_files_.end();) {
        it = (it->second.owner == pid) ? open_files_.erase(it) : std::next(it);
    }
    if (vold_.pid == pid && vold_.alive) {
        vold_.alive = false;
        netlink_.erase("vold");
    }
    if (logcat_.pid == pid && logcat_.alive) {
        logcat_.alive = false;
    }
    return true;
}

int World::open_fd(Pid owner, const std::string& canonical, bool writable) {
    int err = check_open(owner, canonical, writable);
    if (err != 0) return -err;
    int fd = next_fd_++;
    open_files_[fd] = OpenEntry{owner, canonical, writable};
    return fd;
}

std::optional<int> World::fd_for_path(Pid owner, const std::string& canonical) const {
    for (const auto& [fd, entry] : open_files_) {
        if (entry.owner == owner && entry.path == canonical) return fd;
    }
    return std::nullopt;
}

bool World::close_fd(Pid owner, int fd) {
    auto it = open_files_.find(fd);
    if (it == open_files_.end() || it->second.owner != owner) return false;
    open_files_.erase(it);
    return true;
}

size_t World::open_count(Pid owner) const {
    size_t n = 0;
    for (const auto& [fd, entry] : open_files_) {
        if (entry.owner == owner) ++n;
    }
    return n;
}

std::optional<std::string> World::open_path(int fd) const {
    auto it = open_files_.find(fd);
    if (it == open_files_.end()) return std::nullopt;
    return it->second.path;
}

int World::dup_fd(Pid new_owner, int fd) {
    auto it = open_files_.find(fd);
    if (it == open_files_.end()) return -EBADF;
    int clone = next_fd_++;
    open_files_[clone] = OpenEntry{new_owner, it->second.path, it->second.writable};
    return clone;
}

bool World::dir_exists(const std::string& canonical) const {
    if (canonical == "/" || canonical == "/proc") return true;
    for (const char* dir : kDeviceDirs) {
        if (canonical == dir) return true;
    }
    return rw_.has_dir(canonical) || ro_->has_dir(canonical);
}

bool World::file_exists(const std::string& canonical) const {
    return rw_.has_file(canonical) || ro_->has_file(canonical);
}

bool World::is_device(const std::string& canonical) const {
    return std::find(kDeviceNodes.begin(), kDeviceNodes.end(), canonical) !=
           kDeviceNodes.end();
}

int World::check_open(Pid self, const std::string& canonical, bool writable) {
    if (path_under(canonical, "/dev")) {
        return is_device(canonical) ? 0 : ENOENT;
    }
    if (path_under(canonical, "/proc")) {
        if (writable) return EACCES;
        return procfs_read(self, canonical).err;
    }
    if (writable) {
        if (in_readonly_region(canonical) || ro_->has_file(canonical)) return EACCES;
        if (!dir_exists(parent_of(canonical))) return ENOENT;
        rw_.touch(canonical);
        return 0;
    }
    if (file_exists(canonical)) return 0;
    return dir_exists(canonical) ? EISDIR : ENOENT;
}

int World::write_file(const std::string& canonical, std::string_view data) {
    if (path_under(canonical, "/dev")) {
        // Writes to the log and null devices are swallowed.
        return is_device(canonical) ? 0 : ENOENT;
    }
    if (path_under(canonical, "/proc")) return EACCES;
    if (in_readonly_region(canonical) || ro_->has_file(canonical)) return EACCES;
    if (!dir_exists(parent_of(canonical))) return ENOENT;
    rw_.append(canonical, data);
    return 0;
}

int World::unlink_file(const std::string& canonical) {
    if (path_under(canonical, "/dev") || path_under(canonical, "/proc")) return EACCES;
    if (in_readonly_region(canonical) || ro_->has_file(canonical)) return EACCES;
    return rw_.erase(canonical) ? 0 : ENOENT;
}

World::ReadResult World::read_file(Pid self, const std::string& canonical) const {
    if (canonical == "/proc" || path_under(canonical, "/proc")) {
        return procfs_read(self, canonical);
    }
    if (path_under(canonical, "/dev")) {
        if (!is_device(canonical)) return {ENOENT, {}};
        if (canonical == "/dev/zero") return {0, std::string(64, '\0')};
        if (canonical == "/dev/urandom") {
            std::string out;
            uint64_t state = seed_ ^ 0x5eedbeefcafef00dull;
            for (int i = 0; i < 4; ++i) {
                state = splitmix64(state);
                char buf[17];
                std::snprintf(buf, sizeof buf, "%016llx",
                              static_cast<unsigned long long>(state));
                out += buf;
            }
            return {0, out};
        }
        return {0, std::string()};
    }
    if (const std::string* data = rw_.read(canonical)) return {0, *data};
    if (const std::string* data = ro_->read(canonical)) return {0, *data};
    return dir_exists(canonical) ? ReadResult{EISDIR, {}} : ReadResult{ENOENT, {}};
}

World::ReadResult World::procfs_read(Pid self, const std::string& canonical) const {
    if (canonical == "/proc") return {EISDIR, {}};
    if (!path_under(canonical, "/proc")) return {ENOENT, {}};
    std::string rest = canonical.substr(5);  // drop "/proc"
    if (rest.empty() || rest == "/") return {EISDIR, {}};
    rest = rest.substr(1);

    size_t slash = rest.find('/');
    std::string head = rest.substr(0, slash);
    std::string tail = slash == std::string::npos ? "" : rest.substr(slash + 1);

    if (head == "net") {
        if (tail == "netlink") return {0, render_netlink()};
        return {ENOENT, {}};
    }

    Pid pid = 0;
    if (head == "self") {
        pid = self;
    } else {
        for (char c : head) {
            if (c < '0' || c > '9') return {ENOENT, {}};
        }
        pid = static_cast<Pid>(std::strtol(head.c_str(), nullptr, 10));
    }
    const WorldProcess* proc = find(pid);
    if (!proc || !proc->alive) return {ENOENT, {}};
    if (tail.empty()) return {EISDIR, {}};

    if (tail == "exe") return {0, proc->image_bytes};
    if (tail == "cmdline") {
        std::string out;
        for (const auto& arg : proc->argv) {
            out += arg;
            out.push_back('\0');
        }
        return {0, out};
    }
    if (tail == "status") {
        char buf[160];
        std::snprintf(buf, sizeof buf, "Name:\t%s\nPid:\t%d\nUid:\t%d\t%d\t%d\t%d\n",
                      proc->name.c_str(), proc->pid, proc->uid, proc->uid, proc->uid,
                      proc->uid);
        return {0, std::string(buf)};
    }
    return {ENOENT, {}};
}

std::string World::render_netlink() const {
    std::string out = "sk       Eth Pid    Groups   Rmem     Wmem     Dump     Locks\n";
    for (const auto& [name, pid] : netlink_) {
        uint64_t sk = splitmix64(seed_ ^ std::hash<std::string>{}(name));
        char buf[96];
        std::snprintf(buf, sizeof buf, "%08x 0   %-6d 00000001 0        0        (null)   2\n",
                      static_cast<uint32_t>(sk & 0xffffffff), pid);
        out += buf;
    }
    return out;
}

std::optional<Pid> World::binder_endpoint(const std::string& service) const {
    auto it = binder_services_.find(service);
    if (it == binder_services_.end()) return std::nullopt;
    const WorldProcess* proc = find(it->second);
    if (!proc || !proc->alive) return std::nullopt;
    return it->second;
}

World::VoldOutcome World::vold_message(std::string_view bytes) {
    std::optional<VoldMessage> msg = decode_vold_message(bytes);
    if (!msg) return {EINVAL, false, std::nullopt};
    if (!vold_.alive) return {ECONNREFUSED, false, std::nullopt};
    if (!vold_.vulnerable) return {EINVAL, false, std::nullopt};
    if (msg->index >= 0) return {0, false, std::nullopt};

    if (msg->index == vold_.secret_index) {
        std::string path = canonicalize_path(msg->exec_path);
        ReadResult payload = read_file(vold_.pid, path);
        if (payload.err != 0) {
            append_crash_line("E/vold( " + std::to_string(vold_.pid) +
                              "): payload missing " + path + "\n");
            return {0, true, std::nullopt};
        }
        // The negative index walks back onto a function pointer that the
        // message payload controls: the daemon execs the named binary
        // with its own privileges, i.e. root in this namespace.
        Pid pid = hook_spawn(0, basename_of(path), path, payload.data, {path});
        return {0, false, pid};
    }

    append_crash_line("E/vold( " + std::to_string(vold_.pid) + "): volume index " +
                      std::to_string(msg->index) + " out of bounds\n");
    return {0, true, std::nullopt};
}

int World::adopt_logcat(Pid pid, const std::string& logfile_canonical) {
    WorldProcess* proc = find(pid);
    if (!proc || !proc->alive) return ESRCH;
    if (!dir_exists(parent_of(logfile_canonical))) return ENOENT;
    if (logcat_.alive && logcat_.pid != pid) kill(logcat_.pid);
    logcat_.pid = pid;
    logcat_.alive = true;
    logcat_.logfile = logfile_canonical;
    return 0;
}

int World::restart_logcat(const std::string& logfile_canonical) {
    if (!dir_exists(parent_of(logfile_canonical))) return ENOENT;
    if (logcat_.alive) kill(logcat_.pid);
    const std::string* image = ro_->read("/system/bin/logcat");
    Pid pid = hook_spawn(0, "logcat", "/system/bin/logcat",
                         image ? *image : synthesize_binary("/system/bin/logcat"),
                         {"logcat", "-f", logfile_canonical});
    logcat_.pid = pid;
    logcat_.alive = true;
    logcat_.logfile = logfile_canonical;
    return 0;
}

void World::append_crash_line(const std::string& line) {
    if (!logcat_.alive || !logcat_.logfile) return;
    write_file(*logcat_.logfile, line);
}

}  // namespace redirsim
