#pragma once

#include <string>
#include <vector>

#include "kelab/geometry.hpp"
#include "kelab/quadrature.hpp"

namespace kelab {

// Box f = -(1/w) (p f')' with p = w/u'', zero flux at the truncated ends.
// Stored as M^{-1} K with K symmetric tridiagonal (stiffness) and M the
// diagonal mass 2*pi*w*quad.
struct WeightedLaplacianOp {
    SGrid grid;
    std::vector<double> p_half;
    std::vector<double> mass;
    std::vector<double> diag;
    std::vector<double> off;
    std::string boundary = "zero-flux";

    FiberFunction apply(const FiberFunction& f) const;
    // f^T K g
    double form(const FiberFunction& f, const FiberFunction& g) const;
};

struct SpectralPack {
    std::vector<double> eigenvalues;  // ascending, constants excluded
    std::vector<FiberFunction> eigenfunctions;
    int k = 0;
};

// X = h(s) z d/dz; holomorphic iff h is constant.
struct ReducedVectorField {
    FiberFunction h;             // nodal values
    std::vector<double> h_half;  // values at half points (native)
};

struct SplitResult {
    ReducedVectorField field;
    FiberFunction g;  // -(1/w)(w h)'
};

struct HolomorphyDefect {
    double l2sq = 0.0;  // 2*pi*int |h'|^2 w ds
    double l1sq = 0.0;  // (2*pi*int |h'| w ds)^2
};

WeightedLaplacianOp assembleWeightedLaplacian(const FiberGeometry& geo);
SpectralPack eigendecompose(const WeightedLaplacianOp& op, const FiberGeometry& geo, int k);
SplitResult splitBox(const FiberFunction& f, const FiberGeometry& geo);
HolomorphyDefect holomorphyDefect(const ReducedVectorField& X, const FiberGeometry& geo);
// i is 1-based.
double futakiResidual(const SpectralPack& pack, const FiberGeometry& geo, int i);
// |(Box f, Box f) - |dbar f|^2 - |L f|^2| / (Box f, Box f)
double bochnerResidual(const FiberFunction& f, const FiberGeometry& geo);
double lemma5Diagnostic(const FiberFunction& f, const FiberGeometry& geo,
                        const FiberGeometry& fsGeo);

}  // namespace kelab
