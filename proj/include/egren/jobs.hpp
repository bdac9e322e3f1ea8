#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace egren {

inline constexpr int kSchemaVersion = 1;

// Named tolerance profiles for the numerical jobs (relative quadrature
// tolerance). Selected by EGREN_TOL_PROFILE, overridden by an explicit value.
struct TolerancePolicy {
    std::string profile = "default";  // fast | default | strict
    double rel_tol = 1e-8;

    static TolerancePolicy named(std::string_view profile);
    static TolerancePolicy from_environment();
};

struct JobOptions {
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    TolerancePolicy policy;
};

struct JobOutput {
    nlohmann::ordered_json report;
    std::string csv;  // plot data, empty when the job has none
    int exit_code = 0;
};

const std::vector<std::string>& job_commands();

// Never throws for bad input: schema problems give exit code 2 and numerical
// failures exit code 3, with an error object in the report.
JobOutput run_job(std::string_view command, const nlohmann::json& spec, const JobOptions& opt = {});

// Write to a temporary file next to `path`, then rename over it.
void write_atomic(const std::string& path, const std::string& contents);

}  // namespace egren
