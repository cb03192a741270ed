#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kelab/errors.hpp"
#include "kelab/geodesic.hpp"
#include "kelab/io.hpp"
#include "kelab/pipeline.hpp"
#include "kelab/spectral.hpp"

namespace {

using namespace kelab;
using nlohmann::json;

struct Overrides {
    std::string config;
    std::optional<int> n, m, k, threads;
    std::vector<double> s_range, eps;
    std::optional<double> tau, tol, ke_tol;
    std::optional<std::string> out;
    std::optional<unsigned long long> seed;
};

void addCommon(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "JSON run configuration; flags override it");
    app->add_option("--n", o.n, "s-grid size");
    app->add_option("--m", o.m, "t-grid size");
    app->add_option("--s-range", o.s_range, "s_min,s_max")->delimiter(',')->expected(2);
    app->add_option("--eps", o.eps, "strictly decreasing ε schedule, comma separated")->delimiter(',');
    app->add_option("--tau", o.tau, "pullback parameter of the second endpoint");
    app->add_option("--tol", o.tol, "ε-geodesic residual tolerance");
    app->add_option("--ke-tol", o.ke_tol, "KE residual tolerance");
    app->add_option("--k", o.k, "number of eigenpairs");
    app->add_option("--out", o.out, "output directory");
    app->add_option("--seed", o.seed, "seed for randomized suites");
    app->add_option("--threads", o.threads, "worker threads (default: KELAB_THREADS or all cores)");
}

RunConfig resolve(const std::string& command, const Overrides& o) {
    RunConfig c;
    if (!o.config.empty()) {
        json j;
        try {
            j = json::parse(io::readFile(o.config));
        } catch (const json::exception& e) {
            throw ConfigError("config '" + o.config + "' is not valid JSON: " + e.what());
        }
        c = RunConfig::fromJson(j);
    }
    c.command = command;
    if (o.n) c.n = *o.n;
    if (o.m) c.m = *o.m;
    if (o.k) c.k = *o.k;
    if (o.threads) c.threads = *o.threads;
    if (o.s_range.size() == 2) {
        c.s_min = o.s_range[0];
        c.s_max = o.s_range[1];
    }
    if (!o.eps.empty()) c.eps = o.eps;
    if (o.tau) c.tau = *o.tau;
    if (o.tol) c.tol = *o.tol;
    if (o.ke_tol) c.ke_tol = *o.ke_tol;
    if (o.out) c.out = *o.out;
    if (o.seed) c.seed = *o.seed;
    return c;
}

int cmdKeSolve(const RunConfig& c) {
    c.validate(0);
    KeSolveInfo info;
    const auto u = solveKE(c.grid(), c.ke_tol, {}, &info);
    const auto fs = fubiniStudyPotential(u.grid);
    double err = 0.0;
    for (int i = 0; i < u.grid.n; ++i) err = std::max(err, std::abs(u.values[i] - fs.values[i]));
    io::ensureDirectory(c.out);
    io::savePotential(c.out + "/potential.json", u);
    const json rep = {{"iterations", info.iterations},
                      {"residual", info.residual},
                      {"history", info.history},
                      {"residual_second_order", keResidual(u)},
                      {"kahler_volume", kahlerVolume(u)},
                      {"sup_to_fubini_study", err}};
    io::writeFile(c.out + "/ke_report.json", rep.dump(1) + "\n");
    std::printf("ke-solve: %d iterations, residual %.3e, sup|u - u_FS| %.3e\n", info.iterations,
                info.residual, err);
    return 0;
}

int cmdSpectrum(const RunConfig& c, const std::string& file) {
    if (c.k < 1) throw ConfigError("eigenpair count k must be at least 1");
    const auto u = io::loadPotential(file);
    if (c.k >= u.grid.n - 2) throw ConfigError("eigenpair count k must be smaller than n-2");
    const auto geo = fiberGeometry(u);
    const auto pack = eigendecompose(assembleWeightedLaplacian(geo), geo, c.k);
    std::string csv = "i,lambda,futaki_residual\n";
    for (int i = 1; i <= pack.k; ++i)
        csv += std::to_string(i) + "," + io::csvNumber(pack.eigenvalues[i - 1]) + "," +
               io::csvNumber(futakiResidual(pack, geo, i)) + "\n";
    io::ensureDirectory(c.out);
    io::writeFile(c.out + "/spectrum.csv", csv);
    io::writeFile(c.out + "/eigenfunctions.csv", io::eigenfunctionsCsv(pack));
    std::printf("spectrum: lambda_1 = %.12g\n", pack.eigenvalues.front());
    return 0;
}

int cmdPipeline(const RunConfig& c) {
    if (c.eps.size() < 3) throw ConfigError("cluster analysis needs an ε schedule of at least 3 values");
    c.validate(3);
    io::ensureDirectory(c.out);  // fail before the expensive part
    const auto r = runPipeline(c);
    writePipelineArtifacts(r, c.out);
    std::printf("pipeline: c = %.6f, a = %.6f, endpoint error %.3e\n", r.automorphism.c,
                r.automorphism.a, r.automorphism.endpoint_error);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"S^1-invariant KE metrics, geodesics and weighted spectra on CP^1"};
    app.require_subcommand(1);
    Overrides oke, ospec, opipe;
    std::string potentialFile;
    auto* ke = app.add_subcommand("ke-solve", "solve the KE equation and write the potential");
    addCommon(ke, oke);
    auto* spec = app.add_subcommand("spectrum", "weighted Laplacian spectrum of a potential file");
    addCommon(spec, ospec);
    spec->add_option("potential", potentialFile, "potential JSON file")->required();
    auto* pipe = app.add_subcommand("pipeline", "full ε-geodesic experiment");
    addCommon(pipe, opipe);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    std::string stage = "config";
    try {
        if (*ke) {
            stage = "ke-solve";
            return cmdKeSolve(resolve("ke-solve", oke));
        }
        if (*spec) {
            stage = "spectrum";
            return cmdSpectrum(resolve("spectrum", ospec), potentialFile);
        }
        stage = "pipeline";
        return cmdPipeline(resolve("pipeline", opipe));
    } catch (const Error& e) {
        std::fprintf(stderr, "kelab %s: %s\n", stage.c_str(), e.what());
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "kelab %s: internal error: %s\n", stage.c_str(), e.what());
        return 2;
    }
}
