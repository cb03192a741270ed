#include <doctest.h>

#include <cmath>
#include <random>

#include "kelab/quadrature.hpp"

using namespace kelab;

namespace {

// In the moment coordinate x = u'/2 the FS measure is 2*pi dx on [0, 1].
FiberFunction moment(const FiberGeometry& geo) {
    FiberFunction f{geo.grid, geo.u_p};
    for (double& v : f.values) v -= 1.0;  // 2x - 1
    return f;
}

}  // namespace

TEST_CASE("weighted integrals on FS against moment-coordinate closed forms") {
    const auto geo = fiberGeometry(fubiniStudyPotential(SGrid::make(-15, 15, 2049)));
    const auto one = FiberFunction::constant(geo.grid, 1.0);
    CHECK(weightedIntegral(one, geo) == doctest::Approx(geo.mass).epsilon(1e-14));
    const auto f = moment(geo);
    // int (2x-1) dx = 0, int (2x-1)^2 dx = 1/3.
    CHECK(std::abs(weightedIntegral(f, geo)) < 1e-5);
    CHECK(weightedNormSq(f, geo) == doctest::Approx(kTwoPi / 3).epsilon(1e-4));
    // |f'|^2/u'' w = u'' w = 2 x(1-x) in moment terms: total 2*pi/3 as well.
    CHECK(dbarNormSq(f, geo) == doctest::Approx(kTwoPi / 3).epsilon(1e-4));
    CHECK(innerProduct(f, one, geo) == doctest::Approx(weightedIntegral(f, geo)));
}

TEST_CASE("projection to mean zero") {
    const auto geo = fiberGeometry(fubiniStudyPotential(SGrid::make(-15, 15, 513)));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> d;
    auto f = FiberFunction::zeros(geo.grid);
    for (int i = 0; i < geo.grid.n; ++i) f.values[i] = 3.0 + std::sin(geo.grid.s(i)) + 0.1 * d(rng);
    const auto p = projectPerp(f, geo);
    CHECK(std::abs(weightedIntegral(p, geo)) < 1e-13 * std::sqrt(weightedNormSq(f, geo)));
    const double shift = f.values[0] - p.values[0];
    for (int i = 0; i < geo.grid.n; ++i) CHECK(f.values[i] - p.values[i] == doctest::Approx(shift));
    const auto pp = projectPerp(p, geo);
    for (int i = 0; i < geo.grid.n; ++i) CHECK(pp.values[i] == doctest::Approx(p.values[i]).epsilon(1e-12));
    // Gradient energy is blind to constants.
    CHECK(dbarNormSq(f, geo) == doctest::Approx(dbarNormSq(p, geo)).epsilon(1e-12));
    CHECK(dbarNormSq(FiberFunction::constant(geo.grid, 2.0), geo) == 0.0);
}
