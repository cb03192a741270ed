#include "kelab/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <future>
#include <sstream>
#include <thread>

#include "kelab/errors.hpp"
#include "kelab/io.hpp"

namespace kelab {

using nlohmann::json;

void RunConfig::validate(std::size_t minEps) const {
    SGrid::make(s_min, s_max, n);
    if (m < 5) throw ConfigError("time grid needs at least 5 points");
    if (!(tol > 0.0) || !(ke_tol > 0.0)) throw ConfigError("tolerances must be positive");
    if (k < 1 || k >= n - 2) throw ConfigError("eigenpair count k must satisfy 1 <= k < n-2");
    if (eps.size() < minEps) {
        std::ostringstream os;
        os << "ε schedule has " << eps.size() << " value(s); this command needs at least " << minEps;
        throw ConfigError(os.str());
    }
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0)) throw ConfigError("ε values must be positive");
        if (i > 0 && !(eps[i] < eps[i - 1])) throw ConfigError("ε schedule must be strictly decreasing");
    }
    if (std::abs(tau) > (s_max - s_min) / 4.0) throw ConfigError("|tau| exceeds a quarter of the s-range");
}

RunConfig RunConfig::fromJson(const json& j, RunConfig c) {
    try {
        if (j.contains("n")) c.n = j["n"].get<int>();
        if (j.contains("m")) c.m = j["m"].get<int>();
        if (j.contains("s_range")) {
            const auto r = j["s_range"].get<std::vector<double>>();
            if (r.size() != 2) throw ConfigError("s_range must have two entries");
            c.s_min = r[0];
            c.s_max = r[1];
        }
        if (j.contains("eps")) c.eps = j["eps"].get<std::vector<double>>();
        if (j.contains("tau")) c.tau = j["tau"].get<double>();
        if (j.contains("tol")) c.tol = j["tol"].get<double>();
        if (j.contains("ke_tol")) c.ke_tol = j["ke_tol"].get<double>();
        if (j.contains("k")) c.k = j["k"].get<int>();
        if (j.contains("out")) c.out = j["out"].get<std::string>();
        if (j.contains("seed")) c.seed = j["seed"].get<unsigned long long>();
        if (j.contains("threads")) c.threads = j["threads"].get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config file: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::fromJson(const json& j) { return fromJson(j, RunConfig{}); }

int resolveThreads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("KELAB_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallelFor(int count, int threads, const std::function<void(int)>& body) {
    const int workers = std::max(1, std::min(threads, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::future<void>> fut;
    for (int w = 0; w < workers; ++w)
        fut.push_back(std::async(std::launch::async, [&] {
            for (int i = next++; i < count; i = next++) body(i);
        }));
    for (auto& f : fut) f.get();  // rethrows the first failure
}

PipelineResult runPipeline(const RunConfig& cfg) {
    cfg.validate(3);
    PipelineResult r;
    r.config = cfg;
    const int threads = resolveThreads(cfg.threads);
    const SGrid g = cfg.grid();
    const auto tg = uniformTimeGrid(cfg.m);

    r.u0 = solveKE(g, cfg.ke_tol, {}, &r.ke_info);
    r.u1 = pullbackPotential(r.u0, cfg.tau);
    r.legendre = legendrePath(r.u0, r.u1, tg);
    {
        auto path = r.legendre.asPath();
        r.ding_legendre = dingDerivatives(path, pathGeometries(path));
    }

    // ε solves, independent of each other.
    const int ne = static_cast<int>(cfg.eps.size());
    std::vector<SpacetimePotential> sols(ne);
    std::vector<EpsGeodesicInfo> infos(ne);
    std::vector<DingReport> dings(ne);
    parallelFor(ne, threads, [&](int q) {
        sols[q] = solveEpsilonGeodesic(r.u0, r.u1, cfg.eps[q], tg, g, cfg.tol, {}, &infos[q]);
        auto path = sols[q].asPath();
        dings[q] = dingDerivatives(path, pathGeometries(path));
    });
    std::vector<double> epsv, supv;
    for (int q = 0; q < ne; ++q) {
        const double e = cfg.eps[q];
        r.solutions.emplace(e, sols[q]);
        r.solve_info.emplace(e, infos[q]);
        r.ding.emplace(e, dings[q]);
        double d = 0.0;
        for (int j = 0; j < cfg.m; ++j)
            for (int i = 0; i < g.n; ++i)
                d = std::max(d, std::abs(sols[q].values[j][i] - r.legendre.values[j][i]));
        r.sup_to_legendre.emplace(e, d);
        epsv.push_back(e);
        supv.push_back(std::max(d, 1e-300));
        r.integrated.emplace(e, integratedDefect(dings[q]));
        r.A.emplace(e, r.integrated.at(e).sum() / e);
    }
    r.convergence_exponent = logLogSlope(epsv, supv);
    r.chen = verifyChenBounds(r.solutions);

    // Per-fiber spectral analysis.
    r.traces.resize(cfg.m);
    r.clusters.resize(cfg.m);
    r.prop12.resize(cfg.m);
    r.per_t.resize(cfg.m);
    std::vector<ExtractedField> fields(cfg.m);
    std::vector<char> hasField(cfg.m, 0);
    parallelFor(cfg.m, threads, [&](int j) {
        EpsilonTrace tr;
        for (int q = 0; q < ne; ++q) tr.push_back(fiberDecompose(sols[q], tg[j], cfg.k));
        r.clusters[j] = clusterAnalysis(tr);
        r.prop12[j] = verifyProp12Conditions(tr, 1e6, 1e6, 1e6);
        const auto& last = tr.back();
        PerFiberSummary& s = r.per_t[j];
        s.t = tg[j];
        s.lambda1 = last.pack.eigenvalues.front();
        s.defect = last.defect;
        s.kind = r.clusters[j].kind;
        s.prop12 = r.prop12[j].allHold();
        if (r.clusters[j].kind == ClusterCase::Case1 || r.clusters[j].kind == ClusterCase::Case2Sub2) {
            const auto limitGeo = fiberGeometry(r.legendre.slice(j));
            fields[j] = extractVectorField(tr, r.clusters[j], limitGeo);
            hasField[j] = 1;
            s.c = fields[j].c;
            s.holo_residual = fields[j].holoResidual;
            s.eigen_residual = fields[j].eigenResidual;
        }
        r.traces[j] = std::move(tr);
    });

    std::map<double, std::vector<double>> defects, density;
    for (int q = 0; q < ne; ++q) {
        std::vector<double> d(cfg.m);
        for (int j = 0; j < cfg.m; ++j) d[j] = std::max(r.traces[j][q].defect, 0.0);
        defects.emplace(cfg.eps[q], d);
        auto dd = defectDensity(dings[q]);
        for (double& v : dd) v = std::max(v, 0.0);
        density.emplace(cfg.eps[q], dd);
    }
    r.defect_bound = fatouSubsequence(defects, tg);
    r.fatou = fatouSubsequence(density, tg);
    for (int j = 0; j < cfg.m; ++j) r.per_t[j].C_t = r.defect_bound.C_t[j];

    int nf = 0;
    for (int j = 0; j < cfg.m; ++j)
        if (hasField[j]) {
            r.fields.emplace(tg[j], fields[j]);
            ++nf;
        }
    r.trivial = nf == 0;
    r.identity_residual = vectorFieldIdentityResidual(r.legendre);
    if (r.trivial) {
        // No field anywhere: φ' is constant on every fiber and the identity
        // is the only automorphism the data supports.
        r.automorphism = reconstructAutomorphism(0.0, r.u0, r.u1);
    } else {
        if (nf >= 5) r.time = timeConstancy(r.fields, &r.legendre);
        const double cbar = nf >= 5 ? r.time.c_mean : r.fields.begin()->second.c;
        r.automorphism = reconstructAutomorphism(cbar, r.u0, r.u1);
        const int mid = cfg.m / 2;
        if (hasField[mid])
            r.weak_product = weakProductDiagnostic(r.traces[mid], fields[mid].geo, fields[mid].h_inf);
    }
    return r;
}

json pipelineReportJson(const PipelineResult& r) {
    json per = json::array();
    for (const auto& s : r.per_t) {
        per.push_back({{"t", s.t},
                       {"lambda1", s.lambda1},
                       {"defect", s.defect},
                       {"C_t", std::isfinite(s.C_t) ? json(s.C_t) : json(nullptr)},
                       {"c", s.c},
                       {"holo_residual", s.holo_residual},
                       {"eigen_residual", s.eigen_residual}});
    }
    return {{"tau", r.config.tau},
            {"epsilons", r.config.eps},
            {"per_t", per},
            {"automorphism", {{"a", r.automorphism.a}, {"endpoint_error", r.automorphism.endpoint_error}}}};
}

namespace {

json finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json pipelineSummaryJson(const PipelineResult& r) {
    json s;
    const auto& c = r.config;
    // Thread count is left out: it does not change the numbers.
    s["config"] = {{"n", c.n},     {"m", c.m},           {"s_range", {c.s_min, c.s_max}},
                   {"eps", c.eps}, {"tau", c.tau},       {"tol", c.tol},
                   {"ke_tol", c.ke_tol}, {"k", c.k},     {"seed", c.seed}};
    s["ke"] = {{"iterations", r.ke_info.iterations}, {"residual", r.ke_info.residual}};
    json solves = json::array();
    for (const auto& [e, inf] : r.solve_info) {
        solves.push_back({{"eps", e},
                          {"iterations", inf.iterations},
                          {"residual", inf.residual},
                          {"sup_to_legendre", r.sup_to_legendre.at(e)},
                          {"min_Dsecond", r.ding.at(e).minDsecond()},
                          {"integrated_f", r.integrated.at(e).f_term},
                          {"integrated_delta", r.integrated.at(e).delta_term},
                          {"A", r.A.at(e)}});
    }
    s["solves"] = solves;
    s["convergence_exponent"] = r.convergence_exponent;
    s["chen"] = {{"eps", r.chen.eps},       {"sup_ut", r.chen.sup_ut},
                 {"sup_utt", r.chen.sup_utt}, {"sup_uss", r.chen.sup_uss},
                 {"sup_uts", r.chen.sup_uts}, {"uniform", r.chen.uniform},
                 {"violations", r.chen.violations}};
    double dmin = INFINITY, dmax = -INFINITY;
    for (const auto& row : r.ding_legendre.rows) {
        dmin = std::min(dmin, row.D);
        dmax = std::max(dmax, row.D);
    }
    s["ding_legendre_spread"] = dmax - dmin;
    s["defect_bound_selected_fraction"] = r.defect_bound.selectedFraction();
    s["fatou_selected_fraction"] = r.fatou.selectedFraction();
    json cl = json::array();
    for (std::size_t j = 0; j < r.clusters.size(); ++j) {
        const auto& c = r.clusters[j];
        cl.push_back({{"t", r.per_t[j].t},
                      {"case", clusterCaseName(c.kind)},
                      {"k", c.k},
                      {"truncation", c.truncation},
                      {"clusters", c.cluster_count},
                      {"multiplicity", c.multiplicity},
                      {"prop12", r.per_t[j].prop12}});
    }
    s["clusters"] = cl;
    s["time"] = {{"c_mean", r.time.c_mean},
                 {"c_std", r.time.c_std},
                 {"c_maxdev", r.time.c_maxdev},
                 {"field_drift", r.time.field_drift},
                 {"transport_residual", r.time.transport_residual}};
    s["identity_residual"] = r.identity_residual;
    s["weak_product"] = r.weak_product;
    s["automorphism"] = {{"c", r.automorphism.c},
                         {"a", r.automorphism.a},
                         {"endpoint_error", finite(r.automorphism.endpoint_error)},
                         {"matches", r.automorphism.matches}};
    s["trivial"] = r.trivial;
    return s;
}

void writePipelineArtifacts(const PipelineResult& r, const std::string& dir) {
    io::ensureDirectory(dir);
    io::writeFile(dir + "/report.json", pipelineReportJson(r).dump(1) + "\n");
    io::writeFile(dir + "/summary.json", pipelineSummaryJson(r).dump(1) + "\n");
    io::savePotential(dir + "/u0.json", r.u0);
    io::savePotential(dir + "/u1.json", r.u1);
    io::writeFile(dir + "/ding_legendre.csv", r.ding_legendre.toCsv());
    int q = 0;
    for (auto it = r.solutions.rbegin(); it != r.solutions.rend(); ++it, ++q) {
        const std::string tag = std::to_string(q);
        io::writeFile(dir + "/ding_eps" + tag + ".csv", r.ding.at(it->first).toCsv());
        io::writeFile(dir + "/spacetime_eps" + tag + ".csv", it->second.serialize());
    }
    std::string tr = "t,eps,lambda1,lambda2,defect,mass,total,holo_l2sq,holo_l1sq\n";
    for (const auto& trace : r.traces)
        for (const auto& e : trace) {
            tr += io::csvNumber(e.t) + "," + io::csvNumber(e.eps) + "," +
                  io::csvNumber(e.pack.eigenvalues[0]) + "," +
                  io::csvNumber(e.pack.eigenvalues.size() > 1 ? e.pack.eigenvalues[1] : NAN) + "," +
                  io::csvNumber(e.defect) + "," + io::csvNumber(e.mass) + "," +
                  io::csvNumber(e.total) + "," + io::csvNumber(e.holo.l2sq) + "," +
                  io::csvNumber(e.holo.l1sq) + "\n";
        }
    io::writeFile(dir + "/traces.csv", tr);
}

}  // namespace kelab
