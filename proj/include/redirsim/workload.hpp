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

#include <cstdint>
#include <string>
#include <vector>

#include "redirsim/scenario.hpp"

namespace redirsim {

struct WorkloadBucket {
    std::string service;
    double percent = 0.0;
};

/// Service-call mix for synthetic binder workloads.
struct WorkloadDistribution {
    std::vector<WorkloadBucket> buckets;

    /// Interface mix of a busy interactive app: the display/view
    /// buckets dominate, system services make up the rest.
    static WorkloadDistribution standard();

    double total_percent() const;
    double ui_percent() const;  // mass of buckets routed to the host display path

    /// Throws SimError{ConfigError} unless the mass sums to 100 (+/-0.1).
    void validate() const;
};

/// Deterministic trace of `n` binder transactions drawn from the
/// distribution with the given seed.
ScenarioTrace generate_workload(const WorkloadDistribution& dist, size_t n, uint64_t seed);

}  // namespace redirsim
