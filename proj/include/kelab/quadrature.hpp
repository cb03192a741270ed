#pragma once

#include <vector>

#include "kelab/geometry.hpp"

namespace kelab {

struct FiberFunction {
    SGrid grid;
    std::vector<double> values;

    static FiberFunction zeros(const SGrid& g) { return {g, std::vector<double>(g.n, 0.0)}; }
    static FiberFunction constant(const SGrid& g, double c) {
        return {g, std::vector<double>(g.n, c)};
    }
};

// 2*pi * int f w ds (trapezoid).
double weightedIntegral(const FiberFunction& f, const FiberGeometry& geo);
double innerProduct(const FiberFunction& f, const FiberFunction& g, const FiberGeometry& geo);
double weightedNormSq(const FiberFunction& f, const FiberGeometry& geo);
// 2*pi * int f'^2 / u'' * w ds, evaluated cell by cell as
// sum 2*pi * p_{i+1/2} (f_{i+1}-f_i)^2 / ds. This is exactly the quadratic
// form of the assembled operator, so integration by parts is exact on the
// grid.
double dbarNormSq(const FiberFunction& f, const FiberGeometry& geo);
FiberFunction projectPerp(const FiberFunction& f, const FiberGeometry& geo);

}  // namespace kelab
