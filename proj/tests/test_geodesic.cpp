#include <doctest.h>

#include <cmath>
#include <map>

#include "kelab/errors.hpp"
#include "kelab/geodesic.hpp"
#include "kelab/kernels.hpp"

using namespace kelab;

namespace {

double fsU(double s) { return s > 0 ? 2 * s + 2 * std::log1p(std::exp(-s)) : 2 * std::log1p(std::exp(s)); }

// The C* orbit of FS: u_t(s) = u_FS(s + t tau) - t tau.
double orbit(double s, double t, double tau) { return fsU(s + t * tau) - t * tau; }

double supDiff(const ReducedPotential& a, const ReducedPotential& b) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) r = std::max(r, std::abs(a.values[i] - b.values[i]));
    return r;
}

}  // namespace

TEST_CASE("KE solve recovers Fubini-Study") {
    const auto g = SGrid::make(-15, 15, 2048);
    KeSolveInfo info;
    const auto u = solveKE(g, 1e-9, {}, &info);
    CHECK(supDiff(u, fubiniStudyPotential(g)) < 1e-8);
    CHECK(info.residual < 1e-9);
    CHECK(info.iterations <= 30);
    CHECK(keResidualNumerov(u) < 1e-9);
    CHECK(keResidual(u) < 10 * g.ds * g.ds);
    CHECK(keNormalizer(u) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(u.values[g.n / 2] > 0);
}

TEST_CASE("KE solve from a perturbed start") {
    const auto g = SGrid::make(-15, 15, 1025);
    auto start = fubiniStudyPotential(g);
    for (int i = 0; i < g.n; ++i) start.values[i] += 0.3 / std::cosh(g.s(i));
    KeSolveOptions opt;
    opt.initial = &start;
    KeSolveInfo info;
    const auto u = solveKE(g, 1e-9, opt, &info);
    CHECK(supDiff(u, fubiniStudyPotential(g)) < 1e-8);
    CHECK(info.iterations <= 30);
    for (std::size_t k = 1; k < info.history.size(); ++k) CHECK(info.history[k] < info.history[k - 1]);
    opt.max_iter = 1;
    CHECK_THROWS_AS(solveKE(g, 1e-9, opt), SolverError);
    CHECK_THROWS_AS(solveKE(g, 0.0), ConfigError);
}

TEST_CASE("Legendre dual of FS in closed form") {
    const auto u = fubiniStudyPotential(SGrid::make(-15, 15, 1025));
    const std::vector<double> x = {0.05, 0.5, 1.0, 1.5, 1.95};
    const auto d = legendreDual(u, x);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double ref = x[k] * std::log(x[k] / (2 - x[k])) - 2 * std::log(2 / (2 - x[k]));
        CHECK(d[k] == doctest::Approx(ref).epsilon(1e-8));
    }
}

TEST_CASE("Legendre geodesic between KE metrics is the C* orbit") {
    const auto g = SGrid::make(-15, 15, 513);
    const double tau = 0.5;
    const auto u0 = fubiniStudyPotential(g);
    const auto u1 = pullbackPotential(u0, tau);
    const LegendreGeodesic geo(u0, u1);
    CHECK(supDiff(geo.at(0.0), u0) < 1e-12);
    CHECK(supDiff(geo.at(1.0), u1) < 1e-9);
    for (double t : {0.25, 0.5, 0.8}) {
        const auto ut = geo.at(t);
        double e = 0.0;
        for (int i = 0; i < g.n; ++i) e = std::max(e, std::abs(ut.values[i] - orbit(g.s(i), t, tau)));
        CHECK(e < 1e-6);  // interpolation back to the grid, O(ds^4)
        // d/dt u_t = tau (u_t' - 1)
        const auto v = geo.timeDerivative(t);
        double ev = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const double x = 2 / (1 + std::exp(-(g.s(i) + t * tau)));
            ev = std::max(ev, std::abs(v[i] - tau * (x - 1)));
        }
        CHECK(ev < 1e-6);
    }
    CHECK_THROWS_AS(geo.at(1.5), ConfigError);
    const auto path = legendrePath(u0, u1, uniformTimeGrid(17));
    CHECK(path.m() == 17);
    CHECK(path.maResidual() < 1e-3);
    CHECK_THROWS_AS(uniformTimeGrid(2), ConfigError);
}

TEST_CASE("epsilon-geodesics: residual, identity, convergence rate, bounds") {
    const auto g = SGrid::make(-15, 15, 257);
    const auto u0 = fubiniStudyPotential(g);
    const auto u1 = pullbackPotential(u0, 0.5);
    const auto tg = uniformTimeGrid(17);
    const auto leg = legendrePath(u0, u1, tg);
    const double tol = 1e-10;
    std::map<double, SpacetimePotential> sols;
    std::vector<double> dist;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        EpsGeodesicInfo info;
        const auto u = solveEpsilonGeodesic(u0, u1, eps, tg, g, tol, {}, &info);
        CHECK(info.residual < tol);
        CHECK(u.maResidual() < 1e-8);
        CHECK(u.minSpacetimeDet() > 0.0);
        for (int i = 0; i < g.n; ++i) {
            CHECK(u.values.front()[i] == u0.values[i]);
            CHECK(u.values.back()[i] == u1.values[i]);
        }
        // f u_ss = ε h'' with the same stencils the solver uses.
        const auto f = geodesicDefect(u);
        const auto hpp = derivative2(u.background.values, g.ds);
        double worst = 0.0;
        for (int j = 1; j + 1 < u.m(); ++j) {
            const auto uss = derivative2(u.values[j], g.ds);
            for (int i = 1; i + 1 < g.n; ++i) {
                CHECK(f[j][i] > 0.0);
                worst = std::max(worst, std::abs(f[j][i] * uss[i] - eps * hpp[i]));
            }
        }
        CHECK(worst < 10 * tol);
        double d = 0.0;
        for (int j = 0; j < u.m(); ++j)
            for (int i = 0; i < g.n; ++i) d = std::max(d, std::abs(u.values[j][i] - leg.values[j][i]));
        dist.push_back(d);
        sols.emplace(eps, u);
    }
    // sup |u_ε - u_0| ~ C ε
    CHECK(std::log(dist[0] / dist[2]) / std::log(100.0) >= 0.9);
    const auto chen = verifyChenBounds(sols);
    CHECK(chen.uniform);
    CHECK(chen.violations.empty());
    CHECK(chen.eps.front() == 1e-1);
    CHECK_THROWS_AS(verifyChenBounds({{0.1, sols.at(0.1)}}), ConfigError);
}

TEST_CASE("epsilon-geodesic is the same under both kernel backends") {
    const auto g = SGrid::make(-15, 15, 129);
    const auto u0 = fubiniStudyPotential(g);
    const auto u1 = pullbackPotential(u0, 0.5);
    const auto tg = uniformTimeGrid(9);
    const auto before = kernels::activeBackend();
    kernels::setBackend(kernels::Backend::Scalar);
    const auto a = solveEpsilonGeodesic(u0, u1, 1e-2, tg, g, 1e-10);
    kernels::setBackend(kernels::Backend::Avx2);
    const auto b = solveEpsilonGeodesic(u0, u1, 1e-2, tg, g, 1e-10);
    kernels::setBackend(before);
    for (int j = 0; j < a.m(); ++j)
        for (int i = 0; i < g.n; ++i) CHECK(a.values[j][i] == doctest::Approx(b.values[j][i]).epsilon(1e-12));
}

TEST_CASE("epsilon-geodesic argument checks") {
    const auto g = SGrid::make(-15, 15, 65);
    const auto u0 = fubiniStudyPotential(g);
    const auto tg = uniformTimeGrid(5);
    CHECK_THROWS_AS(solveEpsilonGeodesic(u0, u0, 0.0, tg, g, 1e-10), ConfigError);
    CHECK_THROWS_AS(solveEpsilonGeodesic(u0, u0, 0.1, tg, g, -1.0), ConfigError);
    CHECK_THROWS_AS(solveEpsilonGeodesic(u0, u0, 0.1, {0.0, 0.3, 1.0}, g, 1e-10), ConfigError);
    CHECK_THROWS_AS(solveEpsilonGeodesic(u0, u0, 0.1, tg, SGrid::make(-15, 15, 67), 1e-10), ConfigError);
}
