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

#include "redirsim/transport.hpp"

namespace redirsim {

SwitchCounter& SwitchCounter::operator+=(const SwitchCounter& other) {
    vm_switches += other.vm_switches;
    context_switches += other.context_switches;
    calls_redirected += other.calls_redirected;
    calls_host += other.calls_host;
    calls_denied += other.calls_denied;
    table_indirections += other.table_indirections;
    return *this;
}

namespace wire {

namespace {

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(bytes_[pos_++]);
    }

    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(static_cast<uint8_t>(bytes_[pos_])) |
                     static_cast<uint16_t>(static_cast<uint8_t>(bytes_[pos_ + 1])) << 8;
        pos_ += 2;
        return v;
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | static_cast<uint8_t>(bytes_[pos_ + i]);
        }
        pos_ += 4;
        return v;
    }

    std::string_view take(size_t n) {
        need(n);
        std::string_view out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    bool done() const { return pos_ == bytes_.size(); }
    size_t pos() const { return pos_; }

private:
    void need(size_t n) const {
        if (pos_ + n > bytes_.size()) {
            throw SimError(ErrorCode::MalformedCall, "truncated message");
        }
    }

    std::string_view bytes_;
    size_t pos_ = 0;
};

}  // namespace

std::string encode(const MarshalledCall& call) {
    std::string out;
    put_u32(out, call.seq);
    out.push_back(static_cast<char>(call.vmid.value()));
    out.push_back(static_cast<char>(call.call.kind));

    uint16_t flags = 0;
    if (call.call.writable) flags |= kFlagWritable;
    put_u16(out, flags);

    // The path slot doubles as the service-name slot for binder calls.
    std::string_view path;
    if (call.call.kind == SyscallKind::BinderIoctl) {
        if (call.call.ioctl_service) path = *call.call.ioctl_service;
    } else if (call.call.path) {
        path = *call.call.path;
    }
    put_u32(out, static_cast<uint32_t>(path.size()));
    out.append(path);

    put_u32(out, static_cast<uint32_t>(call.data.size()));
    out.append(call.data);

    put_u16(out, static_cast<uint16_t>(call.handles.size()));
    for (uint32_t h : call.handles) put_u32(out, h);
    return out;
}

MarshalledCall decode(std::string_view bytes) {
    Reader r(bytes);
    MarshalledCall out;
    out.seq = r.u32();
    out.vmid = Vmid::of(r.u8());

    uint8_t kind_byte = r.u8();
    if (kind_byte >= kSyscallKindCount) {
        throw SimError(ErrorCode::MalformedCall,
                       "unknown syscall kind " + std::to_string(kind_byte));
    }
    out.call.kind = static_cast<SyscallKind>(kind_byte);

    uint16_t flags = r.u16();
    if (flags & ~kFlagWritable) {
        throw SimError(ErrorCode::MalformedCall, "reserved flag bits set");
    }
    out.call.writable = (flags & kFlagWritable) != 0;

    uint32_t path_len = r.u32();
    std::string path(r.take(path_len));
    if (!path.empty()) {
        if (out.call.kind == SyscallKind::BinderIoctl) {
            out.call.ioctl_service = std::move(path);
        } else {
            out.call.path = std::move(path);
        }
    }

    uint32_t data_len = r.u32();
    out.data = std::string(r.take(data_len));
    out.call.payload_len = data_len;

    uint16_t n_handles = r.u16();
    out.handles.reserve(n_handles);
    for (uint16_t i = 0; i < n_handles; ++i) out.handles.push_back(r.u32());

    if (!r.done()) {
        throw SimError(ErrorCode::MalformedCall,
                       "trailing bytes after message at offset " + std::to_string(r.pos()));
    }
    return out;
}

void append_record(std::string& out, const MarshalledCall& call) {
    std::string body = encode(call);
    put_u32(out, static_cast<uint32_t>(body.size()));
    out.append(body);
}

std::vector<MarshalledCall> decode_record_stream(std::string_view bytes) {
    std::vector<MarshalledCall> out;
    Reader r(bytes);
    while (!r.done()) {
        uint32_t len = r.u32();
        out.push_back(decode(r.take(len)));
    }
    return out;
}

}  // namespace wire

MarshalledCall Marshaller::marshal(const ProcessDescriptor& caller, const SyscallDesc& call,
                                   std::string data, const std::vector<int>& handle_args,
                                   const HandleResolver& resolve) {
    if (caller.vmid.is_host()) {
        throw SimError(ErrorCode::MalformedCall, "marshal: caller has no container");
    }
    validate_call(call);

    MarshalledCall out;
    out.seq = next_seq_++;
    out.caller_pid = caller.pid;
    out.vmid = caller.vmid;
    out.call = call;
    out.call.payload_len = static_cast<uint32_t>(data.size());
    out.data = std::move(data);

    for (int host_fd : handle_args) {
        std::optional<RemoteHandle> handle = resolve(host_fd);
        if (!handle) {
            throw SimError(ErrorCode::BadHandle,
                           "fd " + std::to_string(host_fd) + " is not a live remote handle");
        }
        if (handle->vmid != caller.vmid) {
            throw SimError(ErrorCode::BadHandle,
                           "fd " + std::to_string(host_fd) + " belongs to another container");
        }
        out.handles.push_back(static_cast<uint32_t>(handle->container_fd));
    }
    return out;
}

CallResult Dispatcher::dispatch(const MarshalledCall& call, WaitMode mode,
                                const Executor& execute) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_pair(call.vmid.value(), call.caller_pid);
        auto it = last_seq_.find(key);
        if (it != last_seq_.end() && call.seq <= it->second) {
            throw SimError(ErrorCode::MalformedCall,
                           "out-of-order seq " + std::to_string(call.seq));
        }
        last_seq_[key] = call.seq;
    }

    CallResult result = execute(call);
    result.seq = call.seq;
    result.via_hypercall = result.out_data.empty();

    std::lock_guard<std::mutex> lock(mu_);
    counter_.calls_redirected += 1;
    counter_.vm_switches += 2;  // enter the guest, leave the guest
    // With a kernel-side interruptible sleep the proxy wakes straight
    // into call execution. Polling from userspace adds an extra pair
    // of context switches per call.
    counter_.context_switches += (mode == WaitMode::KernelSleep) ? 2 : 4;
    return result;
}

CallResult Dispatcher::null_redirect(const HostExecutor& execute) {
    CallResult result = execute();
    result.via_hypercall = false;

    std::lock_guard<std::mutex> lock(mu_);
    counter_.calls_host += 1;
    counter_.table_indirections += 1;
    return result;
}

void Dispatcher::count_denied() {
    std::lock_guard<std::mutex> lock(mu_);
    counter_.calls_denied += 1;
}

SwitchCounter Dispatcher::counter() const {
    std::lock_guard<std::mutex> lock(mu_);
    return counter_;
}

void Dispatcher::reset() {
    std::lock_guard<std::mutex> lock(mu_);
    counter_ = SwitchCounter{};
    last_seq_.clear();
}

}  // namespace redirsim
