#include <doctest.h>

#include <cmath>
#include <map>

#include "kelab/errors.hpp"
#include "kelab/limits.hpp"

using namespace kelab;

namespace {

// Synthetic trace: spectrum lambda_i(ε) and coefficients a_i(ε) given directly.
EpsilonTraceEntry synthetic(double eps, const std::vector<double>& lam, const std::vector<double>& a,
                            double total = -1.0) {
    EpsilonTraceEntry e;
    e.eps = eps;
    e.t = 0.5;
    e.pack.k = static_cast<int>(lam.size());
    e.pack.eigenvalues = lam;
    e.a = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        e.mass += a[i] * a[i];
        e.defect += (lam[i] - 1.0) * a[i] * a[i];
    }
    e.total = total < 0 ? e.mass : total;
    return e;
}

const std::vector<double> kEps = {1e-1, 1e-2, 1e-3};

}  // namespace

TEST_CASE("lambda -> 1 threshold") {
    CHECK(convergesToOne(kEps, {1.05, 1.005, 1.0004}));
    CHECK_FALSE(convergesToOne(kEps, {1.05, 1.05, 1.05}));
    CHECK(convergesToOne(kEps, {0.999, 1.0, 1.0}));
    CHECK_FALSE(convergesToOne(kEps, {3.0, 3.0, 3.0}));
}

TEST_CASE("synthetic three-cluster recovery") {
    // Nine eigenvalues all tending to 1; mass 1/3 each on {2}, {5,6}, {9}.
    EpsilonTrace tr;
    for (double e : kEps) {
        std::vector<double> lam(9), a(9, 0.0);
        for (int i = 0; i < 9; ++i) lam[i] = 1.0 + e * (1 + 0.1 * i);
        a[1] = std::sqrt(1.0 / 3);
        a[4] = a[5] = std::sqrt(1.0 / 6);
        a[8] = std::sqrt(1.0 / 3);
        tr.push_back(synthetic(e, lam, a));
    }
    const auto r = clusterAnalysis(tr);
    CHECK(r.kind == ClusterCase::Case2Sub2);
    CHECK(r.blocks == std::vector<int>{3, 7, 10});
    CHECK(r.cluster_count == 3);
    CHECK(r.multiplicity == 9);
    CHECK(r.finiteness_ok);
    CHECK(r.cluster_count <= r.multiplicity);
    CHECK(r.truncation == 9);
    CHECK_FALSE(r.impossible);
    for (const auto& g : r.gaps) CHECK(g.size() == 8);
}

TEST_CASE("cluster count never exceeds the lambda = 1 multiplicity") {
    // Mass spread on many indices but only two eigenvalues reach 1.
    for (int spread = 2; spread <= 8; ++spread) {
        EpsilonTrace tr;
        for (double e : kEps) {
            std::vector<double> lam(8), a(8, 0.0);
            for (int i = 0; i < 8; ++i) lam[i] = i < 2 ? 1.0 + e : 2.0 + i;
            for (int i = 0; i < spread; ++i) a[i] = 1.0 / std::sqrt(spread);
            tr.push_back(synthetic(e, lam, a));
        }
        const auto r = clusterAnalysis(tr);
        CHECK(r.multiplicity == 2);
        CHECK(r.cluster_count <= r.multiplicity);
        CHECK(r.finiteness_ok);
        CHECK(r.kind == ClusterCase::Case1);
        CHECK(r.truncation == 2);
        CHECK(r.partial_sums.size() == 3);
    }
}

TEST_CASE("case 1 with a single eigenvalue tending to 1") {
    EpsilonTrace tr;
    for (double e : kEps) tr.push_back(synthetic(e, {1.0 + e, 3.0, 6.0}, {0.9, 0.1 * e, 0.0}));
    const auto r = clusterAnalysis(tr);
    CHECK(r.kind == ClusterCase::Case1);
    CHECK(r.k == 1);
    CHECK(r.truncation == 1);
    CHECK(r.converging == std::vector<bool>{true, false, false});
    CHECK(r.lambda_slope[0] == doctest::Approx(1.0));
    CHECK(r.blocks == std::vector<int>{2});
    const auto p = verifyProp12Conditions(tr, 10.0, 10.0, 10.0);
    CHECK(p.allHold());
    CHECK(p.fitted_C == doctest::Approx(0.81 + 0.02 * 0.1).epsilon(1e-12));
    CHECK_FALSE(verifyProp12Conditions(tr, 10.0, 5.0, 10.0).allHold());  // lambda_N = 6 >= K
    CHECK_FALSE(verifyProp12Conditions(tr, 10.0, 10.0, 0.5).allHold());  // defect/ε > C
}

TEST_CASE("impossible subcase is detected") {
    // All eigenvalues tend to 1 while the captured mass drains away.
    EpsilonTrace tr;
    const std::vector<double> frac = {0.5, 0.2, 0.05};
    for (int q = 0; q < 3; ++q) {
        const double e = kEps[q];
        const double a = std::sqrt(frac[q] / 2);
        tr.push_back(synthetic(e, {1.0 + e, 1.0 + 2 * e}, {a, a}, 1.0));
    }
    const auto r = clusterAnalysis(tr);
    CHECK(r.kind == ClusterCase::Case2Sub1);
    CHECK(r.impossible);
    CHECK_FALSE(r.diagnostics.empty());
    const auto p = verifyProp12Conditions(tr, 10.0, 10.0, 10.0);
    CHECK_FALSE(p.allHold());  // mass fraction drops below 1/4
    const FiberGeometry dummy;
    CHECK_THROWS_AS(extractVectorField(tr, r, dummy), ValidationError);
}

TEST_CASE("trivial limit") {
    EpsilonTrace tr;
    for (double e : kEps) tr.push_back(synthetic(e, {1.0, 3.0}, {0.0, 0.0}, 0.0));
    const auto r = clusterAnalysis(tr);
    CHECK(r.kind == ClusterCase::Trivial);
    CHECK(r.cluster_count == 0);
    const auto p = verifyProp12Conditions(tr, 10.0, 10.0, 10.0);
    CHECK(p.trivial);
    CHECK_FALSE(p.allHold());
    CHECK_THROWS_AS(extractVectorField(tr, r, FiberGeometry{}), ValidationError);
    CHECK_THROWS_AS(clusterAnalysis(EpsilonTrace(tr.begin(), tr.begin() + 1)), ConfigError);
}

TEST_CASE("Gram matrix of limits from distinct eigenspaces") {
    const auto geo = fiberGeometry(fubiniStudyPotential(SGrid::make(-15, 15, 513)));
    const auto pack = eigendecompose(assembleWeightedLaplacian(geo), geo, 4);
    std::vector<ExtractedField> fields;
    for (int i = 0; i < 4; ++i) {
        ExtractedField X;
        X.geo = geo;
        X.u_inf = pack.eigenfunctions[i];
        for (double& v : X.u_inf.values) v *= (i + 1);
        fields.push_back(X);
    }
    auto g = orthogonalityCheck(fields);
    CHECK(g.max_offdiag < 1e-10);
    CHECK_FALSE(g.flagged);
    CHECK(g.gram[1][1] == doctest::Approx(4.0).epsilon(1e-10));
    for (int q = 0; q < geo.grid.n; ++q) fields[2].u_inf.values[q] += 0.01 * fields[0].u_inf.values[q];
    g = orthogonalityCheck(fields);
    CHECK(g.flagged);
}

TEST_CASE("log-log slope") {
    std::vector<double> x = {1e-1, 1e-2, 1e-3}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 1.3));
    CHECK(logLogSlope(x, y) == doctest::Approx(1.3).epsilon(1e-12));
    CHECK_THROWS_AS(logLogSlope({1.0}, {1.0}), ConfigError);
}

TEST_CASE("automorphism reconstruction on KE endpoints") {
    const auto g = SGrid::make(-15, 15, 513);
    const auto u0 = fubiniStudyPotential(g);
    const auto u1 = pullbackPotential(u0, 0.5);
    const auto r = reconstructAutomorphism(0.5, u0, u1);
    CHECK(r.a == doctest::Approx(std::exp(0.25)));
    CHECK(r.endpoint_error < 1e-6);
    CHECK(r.matches);
    CHECK_FALSE(reconstructAutomorphism(0.3, u0, u1).matches);
    const auto id = reconstructAutomorphism(0.0, u0, u0);
    CHECK(id.a == 1.0);
    CHECK(id.endpoint_error == 0.0);
}

TEST_CASE("extraction along a small epsilon-geodesic sweep") {
    const auto g = SGrid::make(-15, 15, 257);
    const auto u0 = fubiniStudyPotential(g);
    const double tau = 0.5;
    const auto u1 = pullbackPotential(u0, tau);
    const auto tg = uniformTimeGrid(17);
    const auto leg = legendrePath(u0, u1, tg);
    std::vector<SpacetimePotential> sols;
    for (double e : kEps) sols.push_back(solveEpsilonGeodesic(u0, u1, e, tg, g, 1e-10));

    std::map<double, ExtractedField> fields;
    for (int j = 2; j <= 14; j += 3) {
        EpsilonTrace tr;
        for (const auto& s : sols) tr.push_back(fiberDecompose(s, tg[j], 4));
        for (const auto& e : tr) {
            CHECK(e.pack.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-3));
            CHECK(e.mass <= e.total * (1 + 1e-8));
            CHECK(e.defect >= -1e-8);
        }
        const auto cl = clusterAnalysis(tr);
        CHECK(cl.kind == ClusterCase::Case1);
        CHECK(cl.truncation == 1);
        CHECK(verifyProp12Conditions(tr, 10.0, 100.0, 100.0).allHold());
        const auto limitGeo = fiberGeometry(leg.slice(j));
        const auto X = extractVectorField(tr, cl, limitGeo);
        CHECK(X.c == doctest::Approx(tau).epsilon(2e-2));
        CHECK(X.eigenResidual < 1e-2);
        CHECK(X.norm_fraction > 0.5);
        const auto wp = weakProductDiagnostic(tr, limitGeo, X.h_inf);
        CHECK(wp.size() == 3);
        CHECK(wp[2] < wp[0]);
        fields.emplace(tg[j], X);
    }
    const auto tc = timeConstancy(fields, &leg);
    CHECK(tc.c_std < 1e-2);
    CHECK(tc.c.size() == 5);
    CHECK(reconstructAutomorphism(tc.c_mean, u0, u1).matches);
    CHECK(vectorFieldIdentityResidual(leg) < 1e-2);
    std::map<double, ExtractedField> few(fields.begin(), std::next(fields.begin(), 3));
    CHECK_THROWS_AS(timeConstancy(few), ConfigError);
    CHECK_THROWS_AS(fiberDecompose(sols[0], 0.123, 4), ConfigError);
}
