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

#include "redirsim/report.hpp"

#include <algorithm>

#include <json.hpp>

namespace redirsim {

using nlohmann::ordered_json;

bool ScenarioReport::all_assertions_passed() const {
    return std::all_of(assertions.begin(), assertions.end(),
                       [](const AssertionOutcome& a) { return a.pass; });
}

size_t ScenarioReport::failed_assertions() const {
    return static_cast<size_t>(std::count_if(
        assertions.begin(), assertions.end(),
        [](const AssertionOutcome& a) { return !a.pass; }));
}

std::string ScenarioReport::to_json_text() const {
    ordered_json doc;
    doc["schema"] = kReportSchema;
    doc["name"] = name;
    doc["seed"] = seed;
    doc["policy"] = policy;
    doc["wait_mode"] = wait_mode;
    doc["threads"] = threads;

    ordered_json step_list = ordered_json::array();
    for (const StepOutcome& s : steps) {
        ordered_json entry;
        entry["index"] = s.index;
        entry["op"] = s.op;
        if (!s.actor.empty()) entry["actor"] = s.actor;
        if (s.route) entry["route"] = *s.route;
        if (s.binder_category) entry["binder_category"] = *s.binder_category;
        entry["retval"] = s.retval;
        if (s.sim_errno != 0) entry["errno"] = s.sim_errno;
        if (!s.note.empty()) entry["note"] = s.note;
        step_list.push_back(std::move(entry));
    }
    doc["steps"] = std::move(step_list);

    ordered_json c;
    c["vm_switches"] = counters.vm_switches;
    c["context_switches"] = counters.context_switches;
    c["calls_redirected"] = counters.calls_redirected;
    c["calls_host"] = counters.calls_host;
    c["calls_denied"] = counters.calls_denied;
    c["table_indirections"] = counters.table_indirections;
    doc["counters"] = std::move(c);

    ordered_json routes = ordered_json::object();
    for (const auto& [kind, histogram] : routes_by_kind) {
        ordered_json inner = ordered_json::object();
        for (const auto& [route, count] : histogram) inner[route] = count;
        routes[kind] = std::move(inner);
    }
    doc["routes_by_kind"] = std::move(routes);

    ordered_json binder = ordered_json::object();
    for (const auto& [category, count] : binder_categories) binder[category] = count;
    doc["binder_categories"] = std::move(binder);

    ordered_json asserts = ordered_json::array();
    for (const AssertionOutcome& a : assertions) {
        ordered_json entry;
        entry["id"] = a.id;
        entry["pass"] = a.pass;
        if (!a.detail.empty()) entry["detail"] = a.detail;
        asserts.push_back(std::move(entry));
    }
    doc["assertions"] = std::move(asserts);

    ordered_json state;
    state["host_ro_digest"] = host_ro_digest;
    state["host_rw_digest"] = host_rw_digest;
    ordered_json per_container = ordered_json::object();
    for (const auto& [vmid, digest] : container_digests) {
        per_container[std::to_string(vmid)] = digest;
    }
    state["container_digests"] = std::move(per_container);
    doc["state"] = std::move(state);

    return doc.dump(2) + "\n";
}

}  // namespace redirsim
