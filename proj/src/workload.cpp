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

#include "redirsim/workload.hpp"

#include <cmath>
#include <random>

#include "redirsim/policy.hpp"

namespace redirsim {

WorkloadDistribution WorkloadDistribution::standard() {
    // Binder traffic mix of a foreground interactive app, measured as
    // ioctl counts per target interface and normalized to percent.
    WorkloadDistribution dist;
    dist.buckets = {
        {"android.ui", 81.35},
        {"com.android.internal.view", 7.72},
        {"android.view", 3.35},
        {"android.app", 2.96},
        {"android.content", 2.69},
        {"android.utils", 1.54},
        {"android.os", 0.20},
        {"com.android.internal.telephony", 0.14},
        {"android.media", 0.03},
        {"android.net", 0.01},
        {"android.accounts", 0.003},
        {"ImountService", 0.002},
    };
    return dist;
}

double WorkloadDistribution::total_percent() const {
    double total = 0.0;
    for (const WorkloadBucket& bucket : buckets) total += bucket.percent;
    return total;
}

double WorkloadDistribution::ui_percent() const {
    double total = 0.0;
    for (const WorkloadBucket& bucket : buckets) {
        if (is_ui_service(bucket.service)) total += bucket.percent;
    }
    return total;
}

void WorkloadDistribution::validate() const {
    if (buckets.empty() || std::abs(total_percent() - 100.0) > 0.1) {
        throw SimError(ErrorCode::ConfigError,
                       "workload percentages must sum to 100 (+/-0.1)");
    }
    for (const WorkloadBucket& bucket : buckets) {
        if (bucket.percent < 0.0) {
            throw SimError(ErrorCode::ConfigError, "negative workload weight");
        }
    }
}

ScenarioTrace generate_workload(const WorkloadDistribution& dist, size_t n,
                                uint64_t seed) {
    dist.validate();

    std::vector<double> cumulative;
    cumulative.reserve(dist.buckets.size());
    double running = 0.0;
    for (const WorkloadBucket& bucket : dist.buckets) {
        running += bucket.percent;
        cumulative.push_back(running);
    }

    ScenarioTrace trace;
    trace.name = "workload-" + std::to_string(n);
    trace.seed = seed;
    trace.bindings.push_back(BindingSpec{"com.workload.app", 10100, false});
    trace.steps.push_back(SpawnStep{"app", "com.workload.app"});

    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < n; ++i) {
        // Top 53 bits to a double in [0,1); avoids the unspecified
        // std:: distributions so traces replay identically everywhere.
        double u = static_cast<double>(rng() >> 11) * 0x1p-53;
        double point = u * running;
        size_t pick = cumulative.size() - 1;
        for (size_t b = 0; b < cumulative.size(); ++b) {
            if (point < cumulative[b]) {
                pick = b;
                break;
            }
        }
        SyscallStep step;
        step.actor = "app";
        step.kind = SyscallKind::BinderIoctl;
        step.service = dist.buckets[pick].service;
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

}  // namespace redirsim
