#include "kelab/quadrature.hpp"

#include <sstream>

#include "kelab/errors.hpp"
#include "kelab/kernels.hpp"

namespace kelab {

namespace {

void checkShape(const FiberFunction& f, const FiberGeometry& geo) {
    if (static_cast<int>(f.values.size()) != geo.grid.n) {
        std::ostringstream os;
        os << "fiber function has " << f.values.size() << " samples, geometry has "
           << geo.grid.n;
        throw ValidationError(os.str());
    }
}

}  // namespace

double weightedIntegral(const FiberFunction& f, const FiberGeometry& geo) {
    checkShape(f, geo);
    return kTwoPi * kernels::dot3(f.values.data(), geo.w.data(), geo.quad.data(), f.values.size());
}

double innerProduct(const FiberFunction& f, const FiberFunction& g, const FiberGeometry& geo) {
    checkShape(f, geo);
    checkShape(g, geo);
    const std::size_t n = f.values.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += f.values[i] * g.values[i] * geo.w[i] * geo.quad[i];
    return kTwoPi * s;
}

double weightedNormSq(const FiberFunction& f, const FiberGeometry& geo) {
    return innerProduct(f, f, geo);
}

double dbarNormSq(const FiberFunction& f, const FiberGeometry& geo) {
    checkShape(f, geo);
    const std::size_t n = f.values.size();
    std::vector<double> d2(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = f.values[i + 1] - f.values[i];
        d2[i] = d * d;
    }
    return kTwoPi * kernels::dot(d2.data(), geo.p_half.data(), n - 1) / geo.grid.ds;
}

FiberFunction projectPerp(const FiberFunction& f, const FiberGeometry& geo) {
    const double mean = weightedIntegral(f, geo) / geo.mass;
    FiberFunction r = f;
    for (double& v : r.values) v -= mean;
    // One correction pass brings the weighted mean to round-off.
    const double resid = weightedIntegral(r, geo) / geo.mass;
    for (double& v : r.values) v -= resid;
    return r;
}

}  // namespace kelab
