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
#include "support.hpp"

using namespace redirsim;

namespace {

// Little-endian byte builders, independent of the production encoder.
void le16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void le32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

MarshalledCall sample_write() {
    MarshalledCall call;
    call.seq = 7;
    call.caller_pid = 1234;
    call.vmid = Vmid::of(2);
    call.call.kind = SyscallKind::FileWrite;
    call.call.path = "/a";
    call.call.writable = true;
    call.call.payload_len = 2;
    call.data = "hi";
    call.handles = {5};
    return call;
}

}  // namespace

TEST_CASE("wire golden bytes") {
    std::string expected;
    le32(expected, 7);                       // seq
    expected.push_back(2);                   // vmid
    expected.push_back(2);                   // kind: file_write
    le16(expected, 1);                       // flags: writable
    le32(expected, 2);                       // path length
    expected += "/a";
    le32(expected, 2);                       // data length
    expected += "hi";
    le16(expected, 1);                       // handle count
    le32(expected, 5);

    CHECK(wire::encode(sample_write()) == expected);
    CHECK(wire::decode(expected) == sample_write());
}

TEST_CASE("binder service travels in the path slot") {
    MarshalledCall call;
    call.seq = 1;
    call.vmid = Vmid::of(1);
    call.call.kind = SyscallKind::BinderIoctl;
    call.call.ioctl_service = "android.content";

    std::string bytes = wire::encode(call);
    std::string expected_prefix;
    le32(expected_prefix, 1);
    expected_prefix.push_back(1);
    expected_prefix.push_back(13);  // kind: binder_ioctl
    le16(expected_prefix, 0);
    le32(expected_prefix, 15);  // strlen("android.content")
    expected_prefix += "android.content";
    CHECK(bytes.substr(0, expected_prefix.size()) == expected_prefix);

    MarshalledCall back = wire::decode(bytes);
    CHECK(back.call.ioctl_service == "android.content");
    CHECK(!back.call.path.has_value());
}

TEST_CASE("decode rejects malformed messages") {
    std::string good = wire::encode(sample_write());

    CHECK_THROWS_AS(wire::decode(good.substr(0, good.size() - 1)), SimError);
    CHECK_THROWS_AS(wire::decode(good + std::string(1, '\0')), SimError);
    CHECK_THROWS_AS(wire::decode(std::string()), SimError);

    std::string bad_kind = good;
    bad_kind[5] = 19;  // first invalid kind tag
    CHECK_THROWS_AS(wire::decode(bad_kind), SimError);

    std::string bad_flags = good;
    bad_flags[7] = char(0x80);  // reserved high flag bits
    CHECK_THROWS_AS(wire::decode(bad_flags), SimError);

    std::string lying_length = good;
    lying_length[8] = 100;  // path length points past the buffer
    CHECK_THROWS_AS(wire::decode(lying_length), SimError);
}

TEST_CASE("decode errors carry the malformed-call code") {
    try {
        wire::decode("abc");
        CHECK(false);
    } catch (const SimError& e) {
        CHECK(e.code() == ErrorCode::MalformedCall);
    }
}

TEST_CASE("wire round-trip on random calls") {
    testing::CallGen gen(0x4242);
    for (int i = 0; i < 5000; ++i) {
        MarshalledCall call;
        call.seq = static_cast<uint32_t>(1 + gen.pick(1u << 30));
        call.vmid = Vmid::of(static_cast<int>(1 + gen.pick(255)));
        call.call = gen.call();
        // The wire carries the caller's data payload verbatim.
        call.data.assign(gen.pick(64), static_cast<char>('A' + gen.pick(26)));
        call.call.payload_len = static_cast<uint32_t>(call.data.size());
        for (uint64_t h = gen.pick(4); h > 0; --h) {
            call.handles.push_back(static_cast<uint32_t>(gen.pick(1000)));
        }

        // Fields that do not travel: host bookkeeping and non-binder
        // service tags are dropped by design.
        call.caller_pid = 0;
        call.call.target_pid.reset();
        if (call.call.kind != SyscallKind::BinderIoctl) {
            call.call.ioctl_service.reset();
        } else {
            call.call.path.reset();
            if (!call.call.ioctl_service) call.call.ioctl_service = "android.ui";
        }
        if (call.call.path && call.call.path->empty()) call.call.path.reset();

        MarshalledCall back = wire::decode(wire::encode(call));
        CHECK(back == call);
    }
}

TEST_CASE("record stream framing") {
    std::string stream;
    MarshalledCall first = sample_write();
    MarshalledCall second = sample_write();
    second.seq = 8;
    second.data = "second body";
    second.call.payload_len = static_cast<uint32_t>(second.data.size());

    wire::append_record(stream, first);
    wire::append_record(stream, second);

    std::vector<MarshalledCall> decoded = wire::decode_record_stream(stream);
    REQUIRE(decoded.size() == 2);
    CHECK(decoded[0] == first);
    CHECK(decoded[1] == second);

    CHECK_THROWS_AS(wire::decode_record_stream(stream.substr(0, stream.size() - 2)),
                    SimError);
    CHECK(wire::decode_record_stream("").empty());
}
