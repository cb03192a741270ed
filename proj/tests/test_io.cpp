#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <unistd.h>

#include "kelab/errors.hpp"
#include "kelab/io.hpp"
#include "kelab/pipeline.hpp"

using namespace kelab;
namespace fs = std::filesystem;

namespace {

fs::path scratchDir(const char* name) {
    const auto p = fs::temp_directory_path() / ("kelab_test_io_" + std::to_string(::getpid())) / name;
    fs::create_directories(p);
    return p;
}

RunConfig tinyConfig() {
    RunConfig c;
    c.n = 129;
    c.m = 9;
    c.k = 4;
    c.threads = 2;
    return c;
}

}  // namespace

TEST_CASE("csv numbers round-trip exactly") {
    for (double v : {0.1, -1.0 / 3, 1e-300, 6.02214076e23, 2.0 * std::acos(-1.0)})
        CHECK(std::strtod(io::csvNumber(v).c_str(), nullptr) == v);
}

TEST_CASE("potential JSON round-trip and validation") {
    const auto dir = scratchDir("pot");
    auto u = fubiniStudyPotential(SGrid::make(-12, 13, 77));
    u.values[5] += 1e-7;  // still convex, not a closed form
    io::savePotential((dir / "u.json").string(), u);
    const auto v = io::loadPotential((dir / "u.json").string());
    CHECK(v.values == u.values);
    CHECK(v.grid.sameAs(u.grid));
    CHECK(v.slope_right == 2.0);

    io::writeFile((dir / "bad.json").string(), "{\"grid\": 3}");
    CHECK_THROWS_AS(io::loadPotential((dir / "bad.json").string()), ValidationError);
    io::writeFile((dir / "junk.json").string(), "not json");
    CHECK_THROWS_AS(io::loadPotential((dir / "junk.json").string()), ValidationError);
    CHECK_THROWS_AS(io::loadPotential((dir / "missing.json").string()), IoError);
    CHECK_THROWS_AS(io::writeFile((dir / "no" / "such" / "f").string(), "x"), IoError);

    auto j = io::potentialToJson(u);
    j["values"][40] = 100.0;
    CHECK_THROWS_AS(io::potentialFromJson(j), ValidationError);
}

TEST_CASE("spacetime potential serialization round-trip") {
    const auto g = SGrid::make(-15, 15, 65);
    const auto u0 = fubiniStudyPotential(g);
    const auto sp = solveEpsilonGeodesic(u0, pullbackPotential(u0, 0.5), 0.1, uniformTimeGrid(5), g, 1e-10);
    const std::string text = sp.serialize();
    const auto back = SpacetimePotential::deserialize(text);
    CHECK(back.values == sp.values);
    CHECK(back.t_grid == sp.t_grid);
    CHECK(back.epsilon == sp.epsilon);
    CHECK(back.background.values == sp.background.values);
    CHECK(back.serialize() == text);
    CHECK_THROWS_AS(SpacetimePotential::deserialize(""), ValidationError);
    CHECK_THROWS_AS(SpacetimePotential::deserialize(text.substr(0, text.size() / 2)), ValidationError);
}

TEST_CASE("Ding CSV round-trip") {
    DingReport rep;
    for (int j = 0; j < 4; ++j) {
        DingRow r;
        r.t = j / 3.0;
        r.E = std::sin(j + 0.1);
        r.F = -std::log(2.0 + j);
        r.D = r.F - r.E;
        r.Dprime = 1e-17 * j;
        r.Dsecond = 3.0 / 7;
        r.c_t = 6.283;
        r.int_f_omega = 1e-5;
        r.int_f_exp = 2e-5;
        r.int_delta_exp = -0.0;
        rep.rows.push_back(r);
    }
    const auto csv = rep.toCsv();
    CHECK(csv.rfind("t,E,F,D,Dprime,Dsecond,c_t,int_f_omega,int_f_exp,int_delta_exp\n", 0) == 0);
    const auto back = DingReport::fromCsv(csv);
    REQUIRE(back.rows.size() == 4);
    CHECK(back.rows[2].E == rep.rows[2].E);
    CHECK(back.rows[1].Dsecond == rep.rows[1].Dsecond);
    CHECK(back.toCsv() == csv);
    CHECK_THROWS_AS(DingReport::fromCsv("x,y\n1,2\n"), ValidationError);
}

TEST_CASE("run configuration") {
    RunConfig c;
    CHECK_NOTHROW(c.validate(3));
    c.eps = {0.1};
    CHECK_THROWS_AS(c.validate(3), ConfigError);
    c.eps = {0.1, 0.1, 0.01};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.tol = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.n = 8;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.k = c.n - 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    const auto j = nlohmann::json::parse(R"({"n": 257, "eps": [0.2, 0.02, 0.002], "s_range": [-10, 10], "tau": 0.25})");
    const auto f = RunConfig::fromJson(j);
    CHECK(f.n == 257);
    CHECK(f.eps.size() == 3);
    CHECK(f.s_min == -10.0);
    CHECK(f.tau == 0.25);
    CHECK(f.m == RunConfig{}.m);
    CHECK_THROWS_AS(RunConfig::fromJson(nlohmann::json::parse(R"({"n": "big"})")), ConfigError);
}

TEST_CASE("thread count resolution and parallel loop") {
    CHECK(resolveThreads(3) == 3);
    ::setenv("KELAB_THREADS", "5", 1);
    CHECK(resolveThreads(0) == 5);
    ::unsetenv("KELAB_THREADS");
    CHECK(resolveThreads(0) >= 1);
    std::vector<int> hit(100, 0);
    parallelFor(100, 4, [&](int i) { hit[i] += 1; });
    for (int h : hit) CHECK(h == 1);
    CHECK_THROWS_AS(parallelFor(10, 3, [](int i) {
                        if (i == 7) throw SolverError("boom");
                    }),
                    SolverError);
}

TEST_CASE("pipeline artifacts are deterministic and readable") {
    const auto cfg = tinyConfig();
    const auto a = runPipeline(cfg);
    auto cfg1 = cfg;
    cfg1.threads = 1;
    const auto b = runPipeline(cfg1);
    const auto ja = pipelineReportJson(a).dump(1), jb = pipelineReportJson(b).dump(1);
    CHECK(ja == jb);
    CHECK(pipelineSummaryJson(a).dump() == pipelineSummaryJson(b).dump());

    const auto rep = pipelineReportJson(a);
    CHECK(rep["tau"] == 0.5);
    CHECK(rep["epsilons"].size() == 3);
    CHECK(rep["per_t"].size() == 9);
    for (const char* key : {"t", "lambda1", "defect", "C_t", "c", "holo_residual", "eigen_residual"})
        CHECK(rep["per_t"][4].contains(key));
    CHECK(rep["automorphism"].contains("a"));
    CHECK(rep["automorphism"].contains("endpoint_error"));

    const auto dir = scratchDir("pipe");
    writePipelineArtifacts(a, dir.string());
    for (const char* f : {"report.json", "summary.json", "u0.json", "u1.json", "ding_legendre.csv",
                          "ding_eps0.csv", "spacetime_eps2.csv", "traces.csv"})
        CHECK(fs::exists(dir / f));
    CHECK(nlohmann::json::parse(io::readFile((dir / "report.json").string())) == rep);
    CHECK(io::loadPotential((dir / "u1.json").string()).values == a.u1.values);
    const auto sp = SpacetimePotential::deserialize(io::readFile((dir / "spacetime_eps0.csv").string()));
    CHECK(sp.values == a.solutions.at(1e-1).values);
    const auto d = DingReport::fromCsv(io::readFile((dir / "ding_eps2.csv").string()));
    CHECK(d.rows.size() == 9);
    CHECK(d.toCsv() == a.ding.at(1e-3).toCsv());
}

TEST_CASE("trivial pipeline: identity automorphism") {
    auto cfg = tinyConfig();
    cfg.tau = 0.0;
    const auto r = runPipeline(cfg);
    CHECK(r.trivial);
    CHECK(r.automorphism.a == 1.0);
    CHECK(r.automorphism.endpoint_error == 0.0);
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& row : r.ding_legendre.rows) {
        lo = std::min(lo, row.D);
        hi = std::max(hi, row.D);
    }
    CHECK(hi - lo < 1e-12);
}
