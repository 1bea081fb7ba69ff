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

#include "redirsim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace redirsim {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(std::string_view in) {
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    for (size_t i = 0; i < in.size(); i += 3) {
        uint32_t chunk = static_cast<uint8_t>(in[i]) << 16;
        if (i + 1 < in.size()) chunk |= static_cast<uint8_t>(in[i + 1]) << 8;
        if (i + 2 < in.size()) chunk |= static_cast<uint8_t>(in[i + 2]);
        out.push_back(kB64Alphabet[(chunk >> 18) & 0x3f]);
        out.push_back(kB64Alphabet[(chunk >> 12) & 0x3f]);
        out.push_back(i + 1 < in.size() ? kB64Alphabet[(chunk >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < in.size() ? kB64Alphabet[chunk & 0x3f] : '=');
    }
    return out;
}

int b64_value(char c) {
    const char* at = std::char_traits<char>::find(kB64Alphabet, 64, c);
    return at ? static_cast<int>(at - kB64Alphabet) : -1;
}

std::string b64_decode(const std::string& in) {
    if (in.size() % 4 != 0) {
        throw SimError(ErrorCode::ConfigError, "bad base64 payload length");
    }
    std::string out;
    for (size_t i = 0; i < in.size(); i += 4) {
        uint32_t chunk = 0;
        int bytes = 3;
        for (int j = 0; j < 4; ++j) {
            char c = in[i + j];
            if (c == '=') {
                chunk <<= 6;
                --bytes;
                continue;
            }
            int v = b64_value(c);
            if (v < 0) throw SimError(ErrorCode::ConfigError, "bad base64 payload");
            chunk = (chunk << 6) | static_cast<uint32_t>(v);
        }
        out.push_back(static_cast<char>((chunk >> 16) & 0xff));
        if (bytes > 1) out.push_back(static_cast<char>((chunk >> 8) & 0xff));
        if (bytes > 2) out.push_back(static_cast<char>(chunk & 0xff));
    }
    return out;
}

bool printable(std::string_view text) {
    return std::all_of(text.begin(), text.end(), [](unsigned char c) {
        return c == '\n' || c == '\t' || (c >= 0x20 && c < 0x7f);
    });
}

[[noreturn]] void bad(const std::string& what) {
    throw SimError(ErrorCode::ConfigError, "trace: " + what);
}

Step parse_step(const json& entry) {
    if (!entry.is_object() || !entry.contains("op")) bad("step needs an 'op'");
    const std::string op = entry.at("op").get<std::string>();

    if (op == "spawn") {
        return SpawnStep{entry.at("actor").get<std::string>(),
                         entry.at("package").get<std::string>()};
    }
    if (op == "fork") {
        return ForkStep{entry.at("actor").get<std::string>(),
                        entry.at("child").get<std::string>()};
    }
    if (op == "exec") {
        ExecStep step;
        step.actor = entry.at("actor").get<std::string>();
        step.path = entry.at("path").get<std::string>();
        if (entry.contains("argv")) {
            step.argv = entry.at("argv").get<std::vector<std::string>>();
        }
        return step;
    }
    if (op == "kill") {
        return KillStep{entry.at("actor").get<std::string>(),
                        entry.at("target").get<std::string>()};
    }
    if (op == "syscall") {
        SyscallStep step;
        step.actor = entry.at("actor").get<std::string>();
        auto kind = syscall_kind_from_string(entry.at("kind").get<std::string>());
        if (!kind) bad("unknown syscall kind " + entry.at("kind").get<std::string>());
        step.kind = *kind;
        if (entry.contains("path")) step.path = entry.at("path").get<std::string>();
        if (entry.contains("service")) step.service = entry.at("service").get<std::string>();
        if (entry.contains("target")) step.target = entry.at("target").get<std::string>();
        if (entry.contains("writable")) step.writable = entry.at("writable").get<bool>();
        if (entry.contains("size")) step.size = entry.at("size").get<uint32_t>();
        if (entry.contains("segment")) step.segment = entry.at("segment").get<std::string>();
        if (entry.contains("save_segment")) {
            step.save_segment = entry.at("save_segment").get<std::string>();
        }
        int sources = entry.contains("data") + entry.contains("data_b64") +
                      entry.contains("data_from") + entry.contains("vold");
        if (sources > 1) bad("step has more than one payload source");
        if (entry.contains("data")) {
            step.data = DataSpec::text(entry.at("data").get<std::string>());
        } else if (entry.contains("data_b64")) {
            step.data = DataSpec::text(b64_decode(entry.at("data_b64").get<std::string>()));
        } else if (entry.contains("data_from")) {
            if (entry.at("data_from").get<std::string>() != "last_read") {
                bad("data_from supports only \"last_read\"");
            }
            step.data = DataSpec::last_read();
        } else if (entry.contains("vold")) {
            const json& vold = entry.at("vold");
            step.data = DataSpec::vold_probe(vold.at("index").get<int32_t>(),
                                             vold.at("exec").get<std::string>());
        }
        return step;
    }
    if (op == "expect_route") {
        ExpectRouteStep step;
        const std::string route = entry.at("route").get<std::string>();
        if (route == "host") {
            step.kind = RouteKind::Host;
        } else if (route == "redirect") {
            step.kind = RouteKind::Redirect;
            if (entry.contains("vmid")) step.vmid = entry.at("vmid").get<int>();
        } else if (route == "deny") {
            step.kind = RouteKind::Deny;
            if (entry.contains("reason")) {
                const std::string reason = entry.at("reason").get<std::string>();
                if (reason == "dangerous_call") step.reason = DenyReason::DangerousCall;
                else if (reason == "unsupported_mmap") step.reason = DenyReason::UnsupportedMmap;
                else if (reason == "policy") step.reason = DenyReason::PolicyDenied;
                else bad("unknown deny reason " + reason);
            }
        } else {
            bad("unknown route " + route);
        }
        return step;
    }
    if (op == "assert") {
        AssertStep step;
        step.id = entry.at("id").get<std::string>();
        if (entry.contains("args")) {
            for (const auto& [key, value] : entry.at("args").items()) {
                step.args[key] = value.is_string() ? value.get<std::string>()
                                                   : value.dump();
            }
        }
        return step;
    }
    bad("unknown op " + op);
}

ordered_json step_to_json(const Step& step) {
    ordered_json out;
    if (const auto* s = std::get_if<SpawnStep>(&step)) {
        out["op"] = "spawn";
        out["actor"] = s->actor;
        out["package"] = s->package;
    } else if (const auto* f = std::get_if<ForkStep>(&step)) {
        out["op"] = "fork";
        out["actor"] = f->actor;
        out["child"] = f->child;
    } else if (const auto* e = std::get_if<ExecStep>(&step)) {
        out["op"] = "exec";
        out["actor"] = e->actor;
        out["path"] = e->path;
        if (!e->argv.empty()) out["argv"] = e->argv;
    } else if (const auto* k = std::get_if<KillStep>(&step)) {
        out["op"] = "kill";
        out["actor"] = k->actor;
        out["target"] = k->target;
    } else if (const auto* c = std::get_if<SyscallStep>(&step)) {
        out["op"] = "syscall";
        out["actor"] = c->actor;
        out["kind"] = to_string(c->kind);
        if (c->path) out["path"] = *c->path;
        if (c->service) out["service"] = *c->service;
        if (c->target) out["target"] = *c->target;
        if (c->writable) out["writable"] = true;
        if (c->size) out["size"] = *c->size;
        if (c->segment) out["segment"] = *c->segment;
        if (c->save_segment) out["save_segment"] = *c->save_segment;
        switch (c->data.kind) {
        case DataSpec::Kind::None:
            break;
        case DataSpec::Kind::Literal:
            if (printable(c->data.literal)) {
                out["data"] = c->data.literal;
            } else {
                out["data_b64"] = b64_encode(c->data.literal);
            }
            break;
        case DataSpec::Kind::FromLastRead:
            out["data_from"] = "last_read";
            break;
        case DataSpec::Kind::VoldProbe:
            out["vold"] = {{"index", c->data.vold_index}, {"exec", c->data.vold_exec}};
            break;
        }
    } else if (const auto* r = std::get_if<ExpectRouteStep>(&step)) {
        out["op"] = "expect_route";
        switch (r->kind) {
        case RouteKind::Host:
            out["route"] = "host";
            break;
        case RouteKind::Redirect:
            out["route"] = "redirect";
            if (r->vmid) out["vmid"] = *r->vmid;
            break;
        case RouteKind::Deny:
            out["route"] = "deny";
            if (r->reason) out["reason"] = to_string(*r->reason);
            break;
        }
    } else if (const auto* a = std::get_if<AssertStep>(&step)) {
        out["op"] = "assert";
        out["id"] = a->id;
        if (!a->args.empty()) out["args"] = a->args;
    }
    return out;
}

}  // namespace

ScenarioTrace trace_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw SimError(ErrorCode::ConfigError, std::string("trace parse: ") + e.what());
    }
    if (!doc.is_object()) bad("top level must be an object");
    if (doc.value("schema", 1) != 1) bad("unsupported schema");
    if (!doc.contains("name")) bad("missing name");

    ScenarioTrace trace;
    try {
        trace.name = doc.at("name").get<std::string>();
        trace.seed = doc.value("seed", 0ull);
        if (doc.contains("bindings")) {
            for (const auto& entry : doc.at("bindings")) {
                BindingSpec spec;
                spec.package = entry.at("package").get<std::string>();
                spec.uid = entry.at("uid").get<Uid>();
                spec.trusted = entry.value("trusted", false);
                trace.bindings.push_back(std::move(spec));
            }
        }
        if (doc.contains("steps")) {
            for (const auto& entry : doc.at("steps")) {
                trace.steps.push_back(parse_step(entry));
            }
        }
    } catch (const json::exception& e) {
        throw SimError(ErrorCode::ConfigError, std::string("trace field: ") + e.what());
    }
    return trace;
}

ScenarioTrace trace_from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw SimError(ErrorCode::ConfigError, "cannot open trace: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return trace_from_json_text(buf.str());
}

std::string trace_to_json_text(const ScenarioTrace& trace) {
    ordered_json doc;
    doc["schema"] = 1;
    doc["name"] = trace.name;
    doc["seed"] = trace.seed;
    doc["bindings"] = ordered_json::array();
    for (const BindingSpec& spec : trace.bindings) {
        ordered_json entry;
        entry["package"] = spec.package;
        entry["uid"] = spec.uid;
        if (spec.trusted) entry["trusted"] = true;
        doc["bindings"].push_back(std::move(entry));
    }
    doc["steps"] = ordered_json::array();
    for (const Step& step : trace.steps) doc["steps"].push_back(step_to_json(step));
    return doc.dump(2) + "\n";
}

}  // namespace redirsim
