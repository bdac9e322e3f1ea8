#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "egren/jobs.hpp"

using namespace egren;
using json = nlohmann::json;

TEST_CASE("sd job on a delta") {
    const auto out = run_job("sd", json::parse(R"j({"d": 3, "delta": [{"alpha": [0, 0, 0], "coeff": 1}]})j"));
    CHECK(out.exit_code == 0);
    CHECK(out.report["result"]["estimate"] == 3.0);
    CHECK(out.report["result"]["exact"] == true);
}

TEST_CASE("classify job") {
    const auto out = run_job("classify", json::parse(R"j({"d": 4, "terms": [{"power": 4, "label": "phi^4"}]})j"));
    CHECK(out.exit_code == 0);
    CHECK(out.report["result"]["verdict"] == "Renormalizable");
    CHECK(out.report["result"]["threshold"] == 4.0);
    CHECK(out.csv.rfind("n,omega,rho,ambiguity\n", 0) == 0);
    const auto nr = run_job("classify", json::parse(R"j({"d": 4, "k": 6})j"));
    CHECK(nr.exit_code == 0);  // a verdict, not an error
    CHECK(nr.report["result"]["verdict"] == "NonRenormalizable");
}

TEST_CASE("cover job on the diagonal is a verdict") {
    const auto out = run_job("cover", json::parse(R"j({"d": 2, "points": [["1/2", 0], ["1/2", 0]]})j"));
    CHECK(out.exit_code == 0);
    CHECK(out.report["result"]["verdict"] == "OnDiagonal");
    const auto w = run_job("cover", json::parse(R"j({"d": 2, "points": [[1, 0], [0, 0]], "subset": [2]})j"));
    CHECK(w.report["result"]["witness"] == json::array({1}));
    CHECK(w.report["result"]["subset_member"] == false);
}

TEST_CASE("glue and wf jobs") {
    const auto g = run_job("glue", json::parse(R"j({"d": 2, "points": [[0, 0], [0, 1]], "I1": [1], "I2": [2], "trace": true})j"));
    CHECK(g.exit_code == 0);
    CHECK(g.report["result"]["consistent"] == true);
    const auto bad = run_job("glue", json::parse(R"j({"d": 2, "points": [[1, 0], [0, 0]], "I1": [2], "I2": [1]})j"));
    CHECK(bad.exit_code == 2);
    const auto w = run_job("wf", json::parse(
        R"j({"mode": "digamma", "d": 2, "points": [[0, 0], [1, 1]], "covectors": [[2, 2], [-2, -2]], "degrees": [2, 2]})j"));
    CHECK(w.report["result"]["verdict"] == "Feasible");
    CHECK(w.report["result"]["witness"]["edges"].size() == 2);
    CHECK(w.report["result"]["witness"]["edges"][0]["beta"] == "1");
    const auto h = run_job("wf", json::parse(
        R"j({"mode": "hormander", "A": {"generators": [[1, 1], [1, -1]]}, "B": {"generators": [[1, 1], [1, -1]]}})j"));
    CHECK(h.report["result"]["product_allowed"] == true);
}

TEST_CASE("wick job") {
    const auto out = run_job("wick", json::parse(R"j({"m": [2, 2], "saturated": true, "d": 4})j"));
    CHECK(out.report["result"]["count"] == 1);
    CHECK(out.report["result"]["terms"][0]["coefficient"] == "2");
    CHECK(out.report["result"]["terms"][0]["rho"] == 0.0);
}

TEST_CASE("schema and numerical failures") {
    CHECK(run_job("classify", json::parse(R"j({"d": 4, "k": 4, "colour": 1})j")).exit_code == 2);
    CHECK(run_job("classify", json::parse(R"j({"d": 4, "k": 4, "version": 2})j")).exit_code == 2);
    CHECK(run_job("classify", json::parse(R"j({"d": 4, "k": 4, "version": 1})j")).exit_code == 0);
    CHECK(run_job("classify", json::parse(R"j({"d": "four", "k": 4})j")).exit_code == 2);
    CHECK(run_job("nope", json::object()).exit_code == 2);
    const auto p = run_job("sd", json::parse(R"j({"d": 1, "kernel": "pow(x1,"})j"));
    CHECK(p.exit_code == 2);
    CHECK(p.report["error"]["kind"] == "Parse");
    CHECK(p.report["error"]["offset"] == 7);
    const auto w = run_job("extend", json::parse(R"j({"d": 1, "kernel": "abs(x1)^(-1)", "weight": [1]})j"));
    CHECK(w.exit_code == 2);
    CHECK(w.report["error"]["message"] == "'weight' must be a JSON object");
    CHECK(run_job("extend", json::parse(R"j({"d": 1, "kernel": "abs(x1)^(-1)", "cutoff": {"tol": 1}})j")).exit_code == 2);
    // the probe reports an unextended kernel as inconclusive instead of failing
    const auto q = run_job("probe", json::parse(R"j({"d": 1, "kernel": "abs(x1)^(-2)", "directions": [[1]]})j"));
    CHECK(q.exit_code == 0);
    CHECK(q.report["result"]["directions"][0]["inconclusive"] == true);
    const auto n = run_job("sd", json::parse(R"j({"d": 1, "kernel": "exp(1/abs(x1))"})j"));
    CHECK(n.exit_code == 3);
    CHECK(n.report["error"]["kind"] == "NonIntegrable");
}

TEST_CASE("reports rerun identically from their echo") {
    const json spec = json::parse(R"j({"d": 1, "kernel": "abs(x1)^(-1)", "probes": {"count": 3}})j");
    JobOptions o;
    o.seed = 42;
    const auto a = run_job("extend", spec, o);
    REQUIRE(a.exit_code == 0);
    CHECK(a.report["input"]["seed"] == 42);
    const auto b = run_job("extend", json::parse(a.report["input"].dump()));
    CHECK(a.report.dump() == b.report.dump());
    o.seed = 43;
    CHECK(run_job("extend", spec, o).report["result"]["probes"] != a.report["result"]["probes"]);
}

TEST_CASE("tolerance profiles") {
    CHECK(TolerancePolicy::named("fast").rel_tol == 1e-6);
    CHECK(TolerancePolicy::named("strict").rel_tol == 1e-10);
    CHECK_THROWS(TolerancePolicy::named("sloppy"));
    JobOptions o;
    o.policy = TolerancePolicy::named("fast");
    const auto out = run_job("sd", json::parse(R"j({"d": 1, "kernel": "abs(x1)^(-0.5)", "n_max": 20})j"), o);
    CHECK(out.report["provenance"]["rel_tol"] == 1e-6);
}

TEST_CASE("atomic writes") {
    const auto dir = std::filesystem::temp_directory_path() / "egren_atomic_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "r.json").string();
    write_atomic(path, "one");
    write_atomic(path, "two");
    std::ifstream f(path);
    std::string s;
    f >> s;
    CHECK(s == "two");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
    CHECK(files == 1);
    std::filesystem::remove_all(dir);
}
