#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "kelab/errors.hpp"
#include "kelab/spectral.hpp"

using namespace kelab;

namespace {

FiberGeometry fsGeo(int n) { return fiberGeometry(fubiniStudyPotential(SGrid::make(-15, 15, n))); }

// Convex potential FS + sum c_j sech(s - s_j), rejected if convexity fails.
ReducedPotential bumped(const SGrid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> amp(-0.1, 0.1), ctr(-2.0, 2.0);
    for (;;) {
        auto u = fubiniStudyPotential(g);
        const int nb = 1 + static_cast<int>(rng() % 3);
        for (int b = 0; b < nb; ++b) {
            const double c = amp(rng), s0 = ctr(rng);
            for (int i = 0; i < g.n; ++i) u.values[i] += c / std::cosh(g.s(i) - s0);
        }
        try {
            u.validate();
            return u;
        } catch (const ValidationError&) {
        }
    }
}

double eigenResidual(const WeightedLaplacianOp& op, const FiberFunction& e, double lambda,
                     const FiberGeometry& geo) {
    auto r = op.apply(e);
    for (int i = 0; i < geo.grid.n; ++i) r.values[i] -= lambda * e.values[i];
    return std::sqrt(weightedNormSq(r, geo) / weightedNormSq(e, geo));
}

}  // namespace

TEST_CASE("operator matches its stencil definition and is symmetric") {
    const auto geo = fsGeo(257);
    const auto op = assembleWeightedLaplacian(geo);
    CHECK(op.boundary == "zero-flux");
    const int n = geo.grid.n;
    const double ds = geo.grid.ds;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    FiberFunction f = FiberFunction::zeros(geo.grid), g = f;
    for (int i = 0; i < n; ++i) {
        f.values[i] = std::tanh(geo.grid.s(i)) + 0.01 * d(rng);
        g.values[i] = std::cos(geo.grid.s(i) / 3);
    }
    const auto bf = op.apply(f);
    for (int i = 1; i + 1 < n; ++i) {
        const double flux_r = geo.p_half[i] * (f.values[i + 1] - f.values[i]) / ds;
        const double flux_l = geo.p_half[i - 1] * (f.values[i] - f.values[i - 1]) / ds;
        const double expect = -(flux_r - flux_l) / ds / (geo.w[i] * geo.quad[i] / ds);
        CHECK(bf.values[i] == doctest::Approx(expect).epsilon(1e-11));
    }
    // (Box f, g) = (f, Box g) = dbar form.
    CHECK(innerProduct(bf, g, geo) == doctest::Approx(innerProduct(f, op.apply(g), geo)).epsilon(1e-11));
    CHECK(op.form(f, f) == doctest::Approx(dbarNormSq(f, geo)).epsilon(1e-12));
    // Constants are in the kernel up to round-off in diag + off + off.
    const auto one = op.apply(FiberFunction::constant(geo.grid, 1.0));
    for (int i = 0; i < n; ++i) CHECK(std::abs(one.values[i]) < 1e-13 * op.diag[i] / op.mass[i]);
}

TEST_CASE("tridiagonal eigensolver agrees with a dense generalized solve") {
    const auto geo = fsGeo(257);
    const auto op = assembleWeightedLaplacian(geo);
    const int n = geo.grid.n;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n), M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        M(i, i) = op.mass[i];
        K(i, i) = op.diag[i];
        if (i + 1 < n) K(i, i + 1) = K(i + 1, i) = op.off[i];
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
    const auto pack = eigendecompose(op, geo, 6);
    REQUIRE(pack.k == 6);
    CHECK(std::abs(es.eigenvalues()(0)) < 1e-9);
    for (int i = 0; i < 6; ++i) {
        // The dense route is only absolutely accurate to eps * |A|, |A| ~ 1e8 here.
        CHECK(pack.eigenvalues[i] == doctest::Approx(es.eigenvalues()(i + 1)).epsilon(1e-6));
        // Same eigenvector up to sign.
        FiberFunction ref{geo.grid, std::vector<double>(n)};
        for (int q = 0; q < n; ++q) ref.values[q] = es.eigenvectors()(q, i + 1);
        const double c = innerProduct(ref, pack.eigenfunctions[i], geo);
        const double nr = std::sqrt(weightedNormSq(ref, geo));
        CHECK(std::abs(c) / nr == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(weightedNormSq(pack.eigenfunctions[i], geo) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("FS spectrum: k(k+1)/2 and the moment eigenfunction") {
    const auto geo = fsGeo(1025);
    const auto op = assembleWeightedLaplacian(geo);
    const auto pack = eigendecompose(op, geo, 4);
    for (int k = 1; k <= 4; ++k) {
        CHECK(pack.eigenvalues[k - 1] == doctest::Approx(k * (k + 1) / 2.0).epsilon(1e-3));
        CHECK(eigenResidual(op, pack.eigenfunctions[k - 1], pack.eigenvalues[k - 1], geo) <
              1e-8 * pack.eigenvalues[k - 1]);
    }
    FiberFunction x{geo.grid, geo.u_p};
    for (double& v : x.values) v -= 1.0;
    const double c = innerProduct(x, pack.eigenfunctions[0], geo);
    CHECK(c * c / weightedNormSq(x, geo) == doctest::Approx(1.0).epsilon(1e-6));
    for (const auto& e : pack.eigenfunctions) {
        double big = 0.0;
        for (double v : e.values)
            if (std::abs(v) > std::abs(big)) big = v;
        CHECK(big > 0.0);
    }
}

TEST_CASE("eigendecompose argument checks") {
    const auto geo = fsGeo(65);
    const auto op = assembleWeightedLaplacian(geo);
    CHECK_THROWS_AS(eigendecompose(op, geo, 0), ConfigError);
    CHECK_THROWS_AS(eigendecompose(op, geo, 63), ConfigError);
    CHECK_NOTHROW(eigendecompose(op, geo, 62));
}

TEST_CASE("split of Box into the vector field divergence") {
    const auto geo = fsGeo(513);
    const auto op = assembleWeightedLaplacian(geo);
    FiberFunction f = FiberFunction::zeros(geo.grid);
    for (int i = 0; i < geo.grid.n; ++i) f.values[i] = std::sin(geo.grid.s(i) / 2) / std::cosh(geo.grid.s(i) / 4);
    const auto sp = splitBox(f, geo);
    const auto bf = op.apply(f);
    double gmax = 0, gdiff = 0;
    for (int i = 1; i + 1 < geo.grid.n; ++i) {
        gmax = std::max(gmax, std::abs(bf.values[i]));
        gdiff = std::max(gdiff, std::abs(sp.g.values[i] - bf.values[i]));
    }
    CHECK(gdiff < 1e-11 * gmax);
    // The moment eigenfunction generates z d/dz: h is the constant 1.
    FiberFunction x{geo.grid, geo.u_p};
    for (double& v : x.values) v -= 1.0;
    const auto X = splitBox(x, geo).field;
    FiberFunction dev = X.h;
    for (double& v : dev.values) v -= 1.0;
    CHECK(weightedNormSq(dev, geo) / geo.mass < 1e-6);
    const auto hd = holomorphyDefect(X, geo);
    CHECK(hd.l2sq < 1e-6);
    CHECK(hd.l1sq <= geo.mass * hd.l2sq * (1 + 1e-9));  // Cauchy-Schwarz
    const auto hf = holomorphyDefect(sp.field, geo);
    CHECK(hf.l2sq > 1e-3);
}

TEST_CASE("Futaki identity on FS and on perturbed potentials, with refinement") {
    std::vector<double> prev;
    for (int n : {257, 513, 1025}) {
        const auto geo = fsGeo(n);
        const auto pack = eigendecompose(assembleWeightedLaplacian(geo), geo, 8);
        std::vector<double> r;
        for (int i = 1; i <= 8; ++i) r.push_back(futakiResidual(pack, geo, i));
        for (double v : r) CHECK(v < 1e-3);
        if (!prev.empty())
            for (int i = 1; i < 8; ++i) CHECK(r[i] < 0.4 * prev[i]);
        prev = r;
    }
    std::mt19937_64 rng(2024);
    const auto g = SGrid::make(-15, 15, 1025);
    for (int trial = 0; trial < 5; ++trial) {
        const auto geo = fiberGeometry(bumped(g, rng));
        const auto pack = eigendecompose(assembleWeightedLaplacian(geo), geo, 8);
        CHECK(pack.eigenvalues[0] >= 1 - 1e-3);
        for (int i = 1; i <= 8; ++i) CHECK(futakiResidual(pack, geo, i) < 1e-3);
    }
}

TEST_CASE("reduced Bochner identity for generic functions") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> a(-1, 1);
    const auto geo = fiberGeometry(bumped(SGrid::make(-15, 15, 1025), rng));
    for (int trial = 0; trial < 5; ++trial) {
        const double c1 = a(rng), c2 = a(rng);
        const int m = 1 + trial % 3;  // tanh(ms/2) is smooth at the poles
        FiberFunction f = FiberFunction::zeros(geo.grid);
        for (int i = 0; i < geo.grid.n; ++i) {
            const double s = geo.grid.s(i);
            f.values[i] = c1 * std::tanh(0.5 * m * s) + c2 / std::cosh(s - 1);
        }
        CHECK(bochnerResidual(f, geo) < 1e-3);
    }
}
