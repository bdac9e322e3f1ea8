#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "egren/errors.hpp"
#include "egren/jobs.hpp"

namespace {

std::string slurp(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot read {}", path));
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"egren: distributions, extensions, causal and microlocal checks, power counting"};
    std::string command, spec_path, out_path, csv_path, profile;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    app.add_option("command", command, "job to run")->required()->check(CLI::IsMember(egren::job_commands()));
    app.add_option("--spec", spec_path, "job spec (JSON file, - for stdin)")->required();
    app.add_option("--seed", seed, "RNG seed for randomized probes");
    app.add_option("--tol", tol, "relative quadrature tolerance");
    app.add_option("--profile", profile, "tolerance profile: fast, default, strict (default from EGREN_TOL_PROFILE)");
    app.add_option("--out", out_path, "write the report here instead of stdout");
    app.add_option("--csv", csv_path, "write plot data (CSV) here when the job has any");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    egren::JobOptions opt;
    opt.seed = seed;
    opt.tol = tol;
    nlohmann::json spec;
    try {
        opt.policy = profile.empty() ? egren::TolerancePolicy::from_environment() : egren::TolerancePolicy::named(profile);
        spec = nlohmann::json::parse(slurp(spec_path));
    } catch (const nlohmann::json::parse_error& e) {
        fmt::print(stderr, "egren: {}: {}\n", spec_path, e.what());
        return 2;
    } catch (const egren::Error& e) {
        fmt::print(stderr, "egren: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "egren: {}\n", e.what());
        return 1;
    }

    const egren::JobOutput res = egren::run_job(command, spec, opt);
    if (res.exit_code != 0 && res.report.contains("error"))
        fmt::print(stderr, "egren: {}: {}\n", res.report["error"]["kind"].get<std::string>(),
                   res.report["error"]["message"].get<std::string>());
    try {
        const std::string text = res.report.dump(2) + "\n";
        if (out_path.empty())
            std::fwrite(text.data(), 1, text.size(), stdout);
        else
            egren::write_atomic(out_path, text);
        if (!csv_path.empty() && !res.csv.empty()) egren::write_atomic(csv_path, res.csv);
    } catch (const std::exception& e) {
        fmt::print(stderr, "egren: {}\n", e.what());
        return 1;
    }
    return res.exit_code;
}
