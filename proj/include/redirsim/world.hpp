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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "redirsim/model.hpp"
#include "redirsim/vfs.hpp"

namespace redirsim {

/// Process entry inside one namespace (the host's or a container's).
struct WorldProcess {
    Pid pid = 0;
    Uid uid = 0;
    bool alive = true;
    std::string name;
    std::string image_path;
    std::string image_bytes;
    std::vector<std::string> argv;
    ProcOrigin origin = ProcOrigin::Boot;
    std::optional<Pid> mirrors_host_pid;  // set on proxies shadowing a host app
};

struct VoldService {
    Pid pid = 0;
    bool alive = true;
    bool vulnerable = true;
    int32_t secret_index = -1;  // negative array index that lands on a code pointer
};

struct LogcatService {
    Pid pid = 0;
    bool alive = true;
    std::optional<std::string> logfile;  // set when running with -f
};

// Control message for the volume daemon: [i32 index][u32 len][path],
// little-endian. Negative indexes index backwards off the daemon's
// volume table, which is exactly the bug the replay scenario drives.
std::string encode_vold_message(int32_t index, std::string_view exec_path);

struct VoldMessage {
    int32_t index = 0;
    std::string exec_path;
};

std::optional<VoldMessage> decode_vold_message(std::string_view bytes);

/// One OS namespace: a process table, a writable tree layered over the
/// shared read-only image, procfs, a netlink registry, and the daemons
/// the replay scenarios interact with. The host is a World with vmid 0;
/// every container is a World with its own vmid.
class World {
public:
    /// Spawn callback so root spawns triggered inside the world (vold
    /// payload execution, logcat respawn) go through system-level
    /// bookkeeping.
    using SpawnHook = std::function<Pid(Uid uid, const std::string& name,
                                        const std::string& image_path,
                                        const std::string& image_bytes,
                                        std::vector<std::string> argv)>;

    World(Vmid vmid, const FileTree* ro, uint64_t seed);

    Vmid vmid() const { return vmid_; }
    FileTree& rw() { return rw_; }
    const FileTree& rw() const { return rw_; }
    const FileTree& ro() const { return *ro_; }

    void set_spawn_hook(SpawnHook hook) { spawn_hook_ = std::move(hook); }

    // -- processes ---------------------------------------------------

    Pid spawn(Uid uid, const std::string& name, const std::string& image_path,
              const std::string& image_bytes, std::vector<std::string> argv,
              ProcOrigin origin, std::optional<Pid> mirrors = std::nullopt);
    WorldProcess* find(Pid pid);
    const WorldProcess* find(Pid pid) const;
    const std::vector<WorldProcess>& processes() const { return procs_; }

    /// Marks the process dead, releases its open files, and clears any
    /// daemon role it held. Returns false for unknown or dead pids.
    bool kill(Pid pid);

    // -- per-process open files ---------------------------------------

    /// Returns a new fd (unique within the world), or -errno.
    int open_fd(Pid owner, const std::string& canonical, bool writable);
    std::optional<int> fd_for_path(Pid owner, const std::string& canonical) const;
    bool close_fd(Pid owner, int fd);
    size_t open_count(Pid owner) const;
    std::optional<std::string> open_path(int fd) const;
    /// Re-opens the same path for another process; fresh fd number.
    int dup_fd(Pid new_owner, int fd);

    // -- filesystem --------------------------------------------------

    bool dir_exists(const std::string& canonical) const;
    bool file_exists(const std::string& canonical) const;
    bool is_device(const std::string& canonical) const;

    /// Legality check for an open; creates the file on write intent.
    /// `self` resolves /proc/self. Returns 0 or an errno value.
    int check_open(Pid self, const std::string& canonical, bool writable);
    int write_file(const std::string& canonical, std::string_view data);
    int unlink_file(const std::string& canonical);

    struct ReadResult {
        int err = 0;
        std::string data;
    };
    /// Whole-file read; `self` resolves /proc/self in this namespace.
    ReadResult read_file(Pid self, const std::string& canonical) const;

    // -- procfs / netlink / binder ------------------------------------

    ReadResult procfs_read(Pid self, const std::string& canonical) const;
    const std::map<std::string, Pid>& netlink() const { return netlink_; }
    std::string render_netlink() const;
    std::optional<Pid> binder_endpoint(const std::string& service) const;

    // -- daemons -------------------------------------------------------

    VoldService& vold() { return vold_; }
    const VoldService& vold() const { return vold_; }
    LogcatService& logcat() { return logcat_; }
    const LogcatService& logcat() const { return logcat_; }

    struct VoldOutcome {
        int err = 0;
        bool crash_logged = false;
        std::optional<Pid> spawned;  // pid (this namespace) of the root payload
    };
    /// Feeds one netlink message to the volume daemon.
    VoldOutcome vold_message(std::string_view bytes);

    /// Re-points the logcat role at an existing process of this world.
    /// Returns 0 or ENOENT when the log file's directory is missing.
    int adopt_logcat(Pid pid, const std::string& logfile_canonical);

    /// Kills any running logcat and spawns a fresh one writing to the
    /// given file. Idempotent per target file. Returns 0 or ENOENT.
    int restart_logcat(const std::string& logfile_canonical);

    void append_crash_line(const std::string& line);

private:
    struct OpenEntry {
        Pid owner = 0;
        std::string path;
        bool writable = false;
    };

    Pid plain_spawn(Uid uid, const std::string& name, const std::string& image_path,
                    const std::string& image_bytes, std::vector<std::string> argv,
                    ProcOrigin origin);
    Pid hook_spawn(Uid uid, const std::string& name, const std::string& image_path,
                   const std::string& image_bytes, std::vector<std::string> argv);
    void boot();

    Vmid vmid_;
    const FileTree* ro_;
    FileTree rw_;
    uint64_t seed_;

    std::vector<WorldProcess> procs_;
    Pid next_pid_ = 1;
    std::map<int, OpenEntry> open_files_;
    int next_fd_ = 3;

    std::map<std::string, Pid> netlink_;
    std::map<std::string, Pid> binder_services_;
    VoldService vold_;
    LogcatService logcat_;
    SpawnHook spawn_hook_;
};

}  // namespace redirsim
