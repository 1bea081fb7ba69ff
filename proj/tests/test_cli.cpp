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

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "redirsim/transport.hpp"

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    std::string command = std::string(REDIRSIM_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);

    CliResult result;
    char buffer[4096];
    size_t got;
    while ((got = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
        result.output.append(buffer, got);
    }
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("cli: builtin smoke run exits zero") {
    CliResult result = run_cli("run --builtin smoke");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("assertions passed") != std::string::npos);
    CHECK(result.output.find("FAIL") == std::string::npos);
}

TEST_CASE("cli: unknown builtin lists the available names") {
    CliResult result = run_cli("run --builtin nope");
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("gingerbreak") != std::string::npos);
    CHECK(result.output.find("smoke") != std::string::npos);
}

TEST_CASE("cli: config mistakes exit with code 2") {
    CHECK(run_cli("run /no/such/trace.json").exit_code == 2);
    CHECK(run_cli("run").exit_code == 2);
    CHECK(run_cli("run --builtin smoke --policy /no/such/rules.json").exit_code == 2);
    CHECK(run_cli("run --builtin smoke --wait-mode warp").exit_code == 2);
    CHECK(run_cli("bench --n 0").exit_code == 2);
    CHECK(run_cli("").exit_code == 2);
}

TEST_CASE("cli: assertion failures exit with code 1") {
    CliResult result = run_cli("run --builtin gingerbreak --policy passthrough");
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("confinement.no_host_root") != std::string::npos);
}

TEST_CASE("cli: run report lands in --out with the requested seed") {
    const std::string out = "/tmp/redirsim_cli_report.json";
    std::remove(out.c_str());
    CliResult result = run_cli("run --builtin smoke --seed 424242 --out " + out);
    REQUIRE(result.exit_code == 0);

    nlohmann::json report = nlohmann::json::parse(slurp(out));
    CHECK(report.at("seed").get<uint64_t>() == 424242);
    CHECK(report.at("name").get<std::string>() == "smoke");
    CHECK(report.at("policy").get<std::string>() == "builtin");
    CHECK(report.at("counters").at("calls_redirected").get<uint64_t>() >= 2);
    std::remove(out.c_str());
}

TEST_CASE("cli: recorded wire traffic decodes and matches the report") {
    const std::string out = "/tmp/redirsim_cli_gb.json";
    const std::string capture = "/tmp/redirsim_cli_gb.wire";
    std::remove(out.c_str());
    std::remove(capture.c_str());

    CliResult result = run_cli("run --builtin gingerbreak --out " + out +
                               " --record-wire " + capture);
    REQUIRE(result.exit_code == 0);

    std::vector<redirsim::MarshalledCall> calls =
        redirsim::wire::decode_record_stream(slurp(capture));
    nlohmann::json report = nlohmann::json::parse(slurp(out));
    CHECK(calls.size() ==
          report.at("counters").at("calls_redirected").get<size_t>());
    CHECK(!calls.empty());
    for (const redirsim::MarshalledCall& call : calls) {
        CHECK(call.vmid.is_container());
    }
    std::remove(out.c_str());
    std::remove(capture.c_str());
}

TEST_CASE("cli: multi-threaded runs verify against the single-threaded report") {
    CliResult result = run_cli("run --builtin gingerbreak --threads 4");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("FAIL") == std::string::npos);
}

TEST_CASE("cli: bench reports the exact switch delta") {
    CliResult result = run_cli("bench --n 200");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("exact") != std::string::npos);
    CHECK(result.output.find("MISMATCH") == std::string::npos);
    CHECK(result.output.find("non-normative") != std::string::npos);
}

TEST_CASE("cli: meminfo prints the modeled footprint") {
    CliResult result = run_cli("meminfo");
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("0.150") != std::string::npos);

    CHECK(run_cli("meminfo --memory-mb 32").exit_code == 2);
    CHECK(run_cli("meminfo --memory-mb 44").exit_code == 0);
}
