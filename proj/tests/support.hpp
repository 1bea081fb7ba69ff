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

#include <random>
#include <string>
#include <vector>

#include "redirsim/policy.hpp"

namespace redirsim::testing {

/// Random but always-valid syscall descriptors paired with random
/// callers, for property tests over the routing layer.
class CallGen {
public:
    explicit CallGen(uint64_t seed) : rng_(seed) {}

    uint64_t pick(uint64_t n) { return rng_() % n; }
    bool chance(unsigned percent) { return pick(100) < percent; }

    ProcessDescriptor caller() {
        ProcessDescriptor proc;
        proc.pid = static_cast<Pid>(100 + pick(5000));
        static const Uid kUids[] = {0, 1000, 2000, 9999, 10000, 10052, 19999};
        proc.uid = kUids[pick(std::size(kUids))];
        // Host callers and small container ids dominate; the full byte
        // range still gets coverage.
        uint64_t roll = pick(100);
        int vmid;
        if (roll < 25) {
            vmid = 0;
        } else if (roll < 85) {
            vmid = static_cast<int>(1 + pick(4));
        } else {
            vmid = static_cast<int>(1 + pick(255));
        }
        proc.vmid = Vmid::of(vmid);
        if (proc.vmid.is_container()) proc.proxy_pid = proc.pid + 10000;
        return proc;
    }

    std::string path() {
        static const char* kPaths[] = {
            "/system/bin/sh",
            "/system/lib/libc.so",
            "/system/framework/framework.jar",
            "/etc/hosts",
            "/data/app/com.a/base.apk",
            "/data/data/com.a/files/db",
            "/data/local/tmp/scratch",
            "/data/misc/keystore",
            "/cache/blob",
            "/sdcard/notes.txt",
            "/dev/binder",
            "/dev/ashmem",
            "/dev/random",
            "/dev/log/main",
            "/dev/graphics/fb0",
            "/proc/self/exe",
            "/proc/net/netlink",
            "/tmp/x",
            "//system//bin/../lib/libc.so",
            "/data/./data/com.a/f",
            "/system/lib/../../etc/hosts",
        };
        return kPaths[pick(std::size(kPaths))];
    }

    std::string service() {
        static const char* kServices[] = {
            "android.ui",
            "android.view",
            "com.android.internal.view",
            "window",
            "input",
            "display",
            "notification",
            "android.app.INotificationManager",
            "android.app",
            "android.content",
            "android.os",
            "android.media",
            "activity",
            "package",
            "vold",
            "netd",
        };
        return kServices[pick(std::size(kServices))];
    }

    SyscallDesc call() {
        SyscallDesc desc;
        desc.kind = static_cast<SyscallKind>(pick(kSyscallKindCount));
        switch (desc.kind) {
        case SyscallKind::FileOpen:
        case SyscallKind::FileRead:
        case SyscallKind::FileWrite:
        case SyscallKind::FileClose:
        case SyscallKind::FileUnlink:
        case SyscallKind::Mmap:
        case SyscallKind::Execve:
        case SyscallKind::DeviceIoctl:
            desc.path = path();
            break;
        case SyscallKind::BinderIoctl:
            if (chance(30)) {
                desc.target_pid = static_cast<Pid>(100 + pick(5000));
                if (chance(30)) desc.ioctl_service = service();
            } else {
                desc.ioctl_service = service();
            }
            break;
        case SyscallKind::Kill:
            desc.target_pid = static_cast<Pid>(1 + pick(6000));
            break;
        default:
            if (chance(10)) desc.path = path();
            break;
        }
        desc.writable = chance(40);
        desc.payload_len = static_cast<uint32_t>(pick(4096));
        return desc;
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace redirsim::testing
