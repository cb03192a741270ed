#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kelab/functionals.hpp"
#include "kelab/geodesic.hpp"
#include "kelab/limits.hpp"

namespace kelab {

struct RunConfig {
    std::string command;
    int n = 1025;
    int m = 65;
    double s_min = -15.0;
    double s_max = 15.0;
    std::vector<double> eps = {1e-1, 1e-2, 1e-3};
    double tau = 0.5;
    double tol = 1e-10;     // ε-geodesic residual
    double ke_tol = 1e-9;   // KE residual
    int k = 8;
    std::string out = "out";
    unsigned long long seed = 0;
    int threads = 0;        // 0: KELAB_THREADS or hardware concurrency

    SGrid grid() const { return SGrid::make(s_min, s_max, n); }
    // ConfigError on any violated invariant; minEps is the schedule length
    // the requested command needs.
    void validate(std::size_t minEps = 1) const;
    static RunConfig fromJson(const nlohmann::json& j, RunConfig base);
    static RunConfig fromJson(const nlohmann::json& j);
};

int resolveThreads(int requested);

// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallelFor(int count, int threads, const std::function<void(int)>& body);

struct PerFiberSummary {
    double t = 0.0;
    double lambda1 = 0.0;
    double defect = 0.0;
    double C_t = 0.0;
    double c = 0.0;
    double holo_residual = 0.0;
    double eigen_residual = 0.0;
    ClusterCase kind = ClusterCase::Trivial;
    bool prop12 = false;
};

struct PipelineResult {
    RunConfig config;
    ReducedPotential u0, u1;
    KeSolveInfo ke_info;
    SpacetimePotential legendre;
    std::map<double, SpacetimePotential> solutions;
    std::map<double, EpsGeodesicInfo> solve_info;
    std::map<double, DingReport> ding;
    DingReport ding_legendre;
    ChenBoundsReport chen;
    std::map<double, double> sup_to_legendre;
    double convergence_exponent = 0.0;
    std::map<double, IntegratedDefect> integrated;
    std::map<double, double> A;  // integrated defect / ε
    FatouSelection defect_bound; // per-t defect <= C_t ε
    FatouSelection fatou;        // per-t Ding defect density
    std::vector<EpsilonTrace> traces;    // by t index
    std::vector<ClusterReport> clusters;  // by t index
    std::vector<Prop12Report> prop12;     // by t index
    std::map<double, ExtractedField> fields;
    std::vector<PerFiberSummary> per_t;
    TimeConstancyReport time;
    AutomorphismReport automorphism;
    double identity_residual = 0.0;
    std::vector<double> weak_product;  // at the middle fiber, by decreasing ε
    bool trivial = false;
};

PipelineResult runPipeline(const RunConfig& cfg);
nlohmann::json pipelineReportJson(const PipelineResult& r);
nlohmann::json pipelineSummaryJson(const PipelineResult& r);
// Writes report.json, summary.json and the intermediate CSV/JSON files.
void writePipelineArtifacts(const PipelineResult& r, const std::string& dir);

}  // namespace kelab
