#include <cmath>
#include <sstream>

#include <boost/math/interpolators/cubic_hermite.hpp>

#include "kelab/errors.hpp"
#include "kelab/geodesic.hpp"

namespace kelab {

// The geodesic is parametrized by the moment value x. For each x the two
// endpoint potentials attain slope x at sigma0, sigma1; the fiber at time t
// passes through ((1-t)sigma0 + t sigma1, (1-t)u0(sigma0) + t u1(sigma1))
// with slope x, and these points are Hermite-interpolated onto the grid.
struct LegendreGeodesic::Impl {
    SGrid grid;
    std::vector<double> x, sigma0, sigma1, U0, U1, k0, k1;  // k = 1/u'' at sigma
    std::vector<double> dual0, dual1;
};

LegendreGeodesic::LegendreGeodesic(const ReducedPotential& u0, const ReducedPotential& u1)
    : impl_(std::make_unique<Impl>()) {
    u0.validate();
    u1.validate();
    if (!u0.grid.sameAs(u1.grid)) throw ValidationError("legendreGeodesic: grid mismatch");
    Impl& m = *impl_;
    m.grid = u0.grid;
    const SGrid& g = m.grid;
    PotentialInterpolant ip0(u0), ip1(u1);

    const double h = 0.5 * g.ds;
    const int pad = static_cast<int>(std::ceil(((g.s_max - g.s_min) / 4.0 + 2.0) / g.ds)) * 2;
    const int count = 2 * (g.n - 1) + 1 + 2 * pad;
    for (int k = 0; k < count; ++k) {
        const double s0 = g.s_min + (k - pad) * h;
        const double x = ip0.deriv(s0);
        if (!(x > 0.0 && x < 2.0)) continue;
        double s1;
        try {
            s1 = ip1.inverseDeriv(x);
        } catch (const ValidationError&) {
            continue;
        }
        const double c0 = ip0.deriv2(s0), c1 = ip1.deriv2(s1);
        if (!(c0 > 0.0 && c1 > 0.0))
            throw ValidationError("legendreGeodesic: endpoint potential is not strictly convex");
        m.x.push_back(x);
        m.sigma0.push_back(s0);
        m.sigma1.push_back(s1);
        m.U0.push_back(ip0.value(s0));
        m.U1.push_back(ip1.value(s1));
        m.k0.push_back(1.0 / c0);
        m.k1.push_back(1.0 / c1);
        m.dual0.push_back(x * s0 - m.U0.back());
        m.dual1.push_back(x * s1 - m.U1.back());
    }
    for (std::size_t k = 1; k < m.x.size(); ++k) {
        if (!(m.x[k] > m.x[k - 1]) || !(m.sigma1[k] > m.sigma1[k - 1]))
            throw ValidationError("legendreGeodesic: moment map not monotone");
    }
}

LegendreGeodesic::~LegendreGeodesic() = default;
LegendreGeodesic::LegendreGeodesic(LegendreGeodesic&&) noexcept = default;

const std::vector<double>& LegendreGeodesic::momentGrid() const { return impl_->x; }
const std::vector<double>& LegendreGeodesic::dual0() const { return impl_->dual0; }
const std::vector<double>& LegendreGeodesic::dual1() const { return impl_->dual1; }

namespace {

void checkCoverage(const std::vector<double>& st, const SGrid& g) {
    if (st.front() > g.s_min || st.back() < g.s_max)
        throw ValidationError("legendreGeodesic: moment samples do not cover the s-range");
}

}  // namespace

ReducedPotential LegendreGeodesic::at(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("legendreGeodesic: t must lie in [0, 1]");
    const Impl& m = *impl_;
    const std::size_t K = m.x.size();
    std::vector<double> st(K), ut(K), slope(m.x);
    for (std::size_t k = 0; k < K; ++k) {
        st[k] = (1.0 - t) * m.sigma0[k] + t * m.sigma1[k];
        ut[k] = (1.0 - t) * m.U0[k] + t * m.U1[k];
    }
    checkCoverage(st, m.grid);
    boost::math::interpolators::cubic_hermite<std::vector<double>> H(std::move(st), std::move(ut),
                                                                     std::move(slope));
    std::vector<double> v(m.grid.n);
    for (int i = 0; i < m.grid.n; ++i) v[i] = H(m.grid.s(i));
    return ReducedPotential::fromSamples(m.grid, std::move(v));
}

std::vector<double> LegendreGeodesic::timeDerivative(double t) const {
    const Impl& m = *impl_;
    const std::size_t K = m.x.size();
    std::vector<double> st(K), v(K), dv(K);
    for (std::size_t k = 0; k < K; ++k) {
        st[k] = (1.0 - t) * m.sigma0[k] + t * m.sigma1[k];
        v[k] = -(m.dual1[k] - m.dual0[k]);
        // dv/ds = -(sigma1 - sigma0) dx/ds, dx/ds = 1 / ((1-t)/u0'' + t/u1'')
        dv[k] = -(m.sigma1[k] - m.sigma0[k]) / ((1.0 - t) * m.k0[k] + t * m.k1[k]);
    }
    checkCoverage(st, m.grid);
    boost::math::interpolators::cubic_hermite<std::vector<double>> H(std::move(st), std::move(v),
                                                                     std::move(dv));
    std::vector<double> out(m.grid.n);
    for (int i = 0; i < m.grid.n; ++i) out[i] = H(m.grid.s(i));
    return out;
}

ReducedPotential legendreGeodesic(const ReducedPotential& u0, const ReducedPotential& u1,
                                  double t) {
    return LegendreGeodesic(u0, u1).at(t);
}

std::vector<double> legendreDual(const ReducedPotential& u, const std::vector<double>& x) {
    PotentialInterpolant ip(u);
    std::vector<double> d(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double s = ip.inverseDeriv(x[k]);
        d[k] = x[k] * s - ip.value(s);
    }
    return d;
}

std::vector<double> uniformTimeGrid(int m) {
    if (m < 3) throw ConfigError("time grid needs at least 3 points");
    std::vector<double> t(m);
    for (int j = 0; j < m; ++j) t[j] = static_cast<double>(j) / (m - 1);
    return t;
}

SpacetimePotential legendrePath(const ReducedPotential& u0, const ReducedPotential& u1,
                                const std::vector<double>& t_grid) {
    LegendreGeodesic geo(u0, u1);
    SpacetimePotential sp;
    sp.t_grid = t_grid;
    sp.grid = u0.grid;
    sp.epsilon = 0.0;
    sp.background = fubiniStudyPotential(u0.grid);
    sp.values.resize(t_grid.size());
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        if (t_grid[j] == 0.0)
            sp.values[j] = u0.values;
        else if (t_grid[j] == 1.0)
            sp.values[j] = u1.values;
        else
            sp.values[j] = geo.at(t_grid[j]).values;
    }
    return sp;
}

}  // namespace kelab
