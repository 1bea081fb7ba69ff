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

#include <cmath>
#include <map>
#include <string>

#include "redirsim/engine.hpp"
#include "redirsim/workload.hpp"

using namespace redirsim;

namespace {

std::map<std::string, size_t> service_histogram(const ScenarioTrace& trace) {
    std::map<std::string, size_t> hist;
    for (const Step& step : trace.steps) {
        if (const auto* call = std::get_if<SyscallStep>(&step)) {
            if (call->service) hist[*call->service]++;
        }
    }
    return hist;
}

}  // namespace

TEST_CASE("standard distribution is normalized and ui-heavy") {
    WorkloadDistribution dist = WorkloadDistribution::standard();
    dist.validate();
    CHECK(dist.total_percent() == doctest::Approx(100.0).epsilon(0.001));

    // The three display-path interfaces carry almost all of the mass.
    CHECK(dist.ui_percent() == doctest::Approx(92.42).epsilon(0.0001));
    CHECK(dist.ui_percent() / dist.total_percent() > 0.91);
}

TEST_CASE("validate rejects broken distributions") {
    WorkloadDistribution short_mass;
    short_mass.buckets = {{"android.ui", 50.0}};
    CHECK_THROWS_AS(short_mass.validate(), SimError);

    WorkloadDistribution negative;
    negative.buckets = {{"android.ui", 120.0}, {"android.view", -20.0}};
    CHECK_THROWS_AS(negative.validate(), SimError);

    WorkloadDistribution empty;
    CHECK_THROWS_AS(empty.validate(), SimError);

    CHECK_THROWS_AS(generate_workload(short_mass, 10, 1), SimError);
}

TEST_CASE("generated traces are deterministic per seed") {
    WorkloadDistribution dist = WorkloadDistribution::standard();
    ScenarioTrace a = generate_workload(dist, 500, 11);
    ScenarioTrace b = generate_workload(dist, 500, 11);
    ScenarioTrace c = generate_workload(dist, 500, 12);

    CHECK(trace_to_json_text(a) == trace_to_json_text(b));
    CHECK(trace_to_json_text(a) != trace_to_json_text(c));

    // One spawn plus n transactions.
    CHECK(a.steps.size() == 501);
    CHECK(std::holds_alternative<SpawnStep>(a.steps.front()));
}

TEST_CASE("sampled frequencies track the bucket weights") {
    WorkloadDistribution dist = WorkloadDistribution::standard();
    const size_t n = 20000;
    ScenarioTrace trace = generate_workload(dist, n, 1234);
    std::map<std::string, size_t> hist = service_histogram(trace);

    size_t total = 0;
    for (const auto& [service, count] : hist) total += count;
    CHECK(total == n);

    for (const WorkloadBucket& bucket : dist.buckets) {
        double expected = bucket.percent / dist.total_percent();
        double got = static_cast<double>(hist[bucket.service]) / n;
        // Binomial noise at n=20000 stays well inside one percentage point.
        CHECK_MESSAGE(std::abs(got - expected) < 0.01,
                      bucket.service << " expected " << expected << " got " << got);
    }
}

TEST_CASE("workload replay keeps binder traffic mostly on the host") {
    const size_t n = 2000;
    ScenarioTrace trace = generate_workload(WorkloadDistribution::standard(), n, 77);
    ScenarioReport report = run_scenario(trace);
    CHECK(report.all_assertions_passed());

    uint64_t host_calls = 0;
    uint64_t redirected = 0;
    if (auto it = report.routes_by_kind.find("binder_ioctl");
        it != report.routes_by_kind.end()) {
        for (const auto& [route, count] : it->second) {
            if (route == "host") host_calls += count;
            if (route == "redirect") redirected += count;
        }
    }
    CHECK(host_calls + redirected == n);
    CHECK(static_cast<double>(host_calls) / n > 0.91);

    // Redirected share tracks the non-display service mass.
    WorkloadDistribution dist = WorkloadDistribution::standard();
    double expected_redirect =
        (dist.total_percent() - dist.ui_percent()) / dist.total_percent();
    CHECK(std::abs(static_cast<double>(redirected) / n - expected_redirect) < 0.02);
}
