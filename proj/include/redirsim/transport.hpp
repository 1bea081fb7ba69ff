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
#include <mutex>
#include <string>
#include <vector>

#include "redirsim/model.hpp"
#include "redirsim/policy.hpp"

namespace redirsim {

/// A syscall packaged for shipment to a container proxy. caller_pid is
/// bookkeeping for the host side; it is not part of the byte encoding
/// (the sequence number correlates calls with results).
struct MarshalledCall {
    uint32_t seq = 0;
    Pid caller_pid = 0;
    Vmid vmid;
    SyscallDesc call;
    std::string data;               // inline payload (write bodies, message bytes)
    std::vector<uint32_t> handles;  // container-side fds being passed

    bool operator==(const MarshalledCall& other) const {
        return seq == other.seq && vmid == other.vmid && call == other.call &&
               data == other.data && handles == other.handles;
    }
};

struct CallResult {
    uint32_t seq = 0;
    int64_t retval = 0;
    int sim_errno = 0;  // 0 on success, otherwise an errno value
    std::string out_data;
    std::optional<RemoteHandle> handle;
    // Results without out-of-band data return on the fast path; bulky
    // results go through the shared ring. Accounting is identical.
    bool via_hypercall = false;

    bool ok() const { return sim_errno == 0; }
};

struct SwitchCounter {
    uint64_t vm_switches = 0;
    uint64_t context_switches = 0;
    uint64_t calls_redirected = 0;
    uint64_t calls_host = 0;
    uint64_t calls_denied = 0;
    uint64_t table_indirections = 0;

    SwitchCounter& operator+=(const SwitchCounter& other);
    bool operator==(const SwitchCounter&) const = default;
};

namespace wire {

// Message layout, little-endian:
//   [u32 seq][u8 vmid][u8 kind][u16 flags]
//   [u32 path_len][path bytes][u32 data_len][data bytes]
//   [u16 n_handles][u32 handle] * n_handles
// For binder_ioctl the path field carries the service name. Flags:
// bit 0 = write intent. Remaining bits must be zero.

constexpr uint16_t kFlagWritable = 1u << 0;

std::string encode(const MarshalledCall& call);

/// Throws SimError{MalformedCall} on truncation, trailing bytes,
/// unknown kind, or reserved flag bits.
MarshalledCall decode(std::string_view bytes);

/// Length-prefixed record stream, for capture files.
void append_record(std::string& out, const MarshalledCall& call);
std::vector<MarshalledCall> decode_record_stream(std::string_view bytes);

}  // namespace wire

/// Packages calls for the proxy. Validates that every passed handle
/// resolves to a live remote handle in the caller's container.
class Marshaller {
public:
    using HandleResolver = std::function<std::optional<RemoteHandle>(int host_fd)>;

    /// Throws SimError{MalformedCall} for a host-side caller and
    /// SimError{BadHandle} for an unresolvable or foreign handle.
    MarshalledCall marshal(const ProcessDescriptor& caller, const SyscallDesc& call,
                           std::string data, const std::vector<int>& handle_args,
                           const HandleResolver& resolve);

    uint32_t next_seq() const { return next_seq_; }

private:
    uint32_t next_seq_ = 1;
};

/// Moves calls across the host/container boundary and accounts for the
/// switches this costs. One redirected call is two VM transitions; the
/// context-switch bill depends on how the proxy waits.
class Dispatcher {
public:
    using Executor = std::function<CallResult(const MarshalledCall&)>;
    using HostExecutor = std::function<CallResult()>;

    /// Ships a marshalled call into its container and waits for the
    /// result. Exactly one result per sequence number; per-caller
    /// sequence numbers must arrive in issue order.
    CallResult dispatch(const MarshalledCall& call, WaitMode mode, const Executor& execute);

    /// Host-bound call: no marshalling and no switches, only the
    /// redirection-table lookup.
    CallResult null_redirect(const HostExecutor& execute);

    void count_denied();

    SwitchCounter counter() const;
    void reset();

private:
    mutable std::mutex mu_;
    SwitchCounter counter_;
    std::map<std::pair<uint8_t, Pid>, uint32_t> last_seq_;
};

}  // namespace redirsim
