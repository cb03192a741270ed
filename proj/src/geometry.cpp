#include "kelab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/tools/roots.hpp>

#include "kelab/errors.hpp"

namespace kelab {

SGrid SGrid::make(double s_min, double s_max, int n) {
    if (!(s_min < 0.0 && 0.0 < s_max)) {
        std::ostringstream os;
        os << "grid must satisfy s_min < 0 < s_max (got " << s_min << ", " << s_max << ")";
        throw ConfigError(os.str());
    }
    if (n < kMinGridPoints) {
        std::ostringstream os;
        os << "grid needs at least " << kMinGridPoints << " points (got " << n << ")";
        throw ConfigError(os.str());
    }
    SGrid g;
    g.s_min = s_min;
    g.s_max = s_max;
    g.n = n;
    g.ds = (s_max - s_min) / (n - 1);
    return g;
}

std::vector<double> SGrid::nodes() const {
    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) s[i] = this->s(i);
    return s;
}

bool SGrid::sameAs(const SGrid& o) const {
    return n == o.n && s_min == o.s_min && s_max == o.s_max;
}

void ReducedPotential::validate() const {
    const int n = grid.n;
    if (static_cast<int>(values.size()) != n) {
        std::ostringstream os;
        os << "potential has " << values.size() << " samples, grid has " << n;
        throw ValidationError(os.str());
    }
    if (slope_left != 0.0 || slope_right != 2.0)
        throw ValidationError("asymptotic slopes must be (0, 2)");
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(values[i])) {
            std::ostringstream os;
            os << "non-finite potential sample at index " << i;
            throw ValidationError(os.str());
        }
    }
    // Half-point slopes must increase strictly and sit inside (0, 2).
    double prev = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        const double x = (values[i + 1] - values[i]) / grid.ds;
        if (!(x > 0.0 && x < 2.0)) {
            std::ostringstream os;
            os << "moment map leaves (0,2) at index " << i << " (u' = " << x << ")";
            throw ValidationError(os.str());
        }
        if (i > 0 && !(x > prev)) {
            std::ostringstream os;
            os << "positivity violated: u'' <= 0 at index " << i;
            throw ValidationError(os.str());
        }
        prev = x;
    }
}

ReducedPotential ReducedPotential::fromSamples(const SGrid& g, std::vector<double> v) {
    ReducedPotential u;
    u.grid = g;
    u.values = std::move(v);
    u.validate();
    return u;
}

std::vector<double> derivative1(const std::vector<double>& f, double ds) {
    const std::size_t n = f.size();
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * ds);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * ds);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * ds);
    return d;
}

std::vector<double> derivative2(const std::vector<double>& f, double ds) {
    const std::size_t n = f.size();
    const double h2 = ds * ds;
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    return d;
}

std::vector<double> trapezoidWeights(const SGrid& g) {
    std::vector<double> q(g.n, g.ds);
    q.front() *= 0.5;
    q.back() *= 0.5;
    return q;
}

double FiberGeometry::measureIdentityResidual() const {
    double r = 0.0;
    for (int i = 0; i < grid.n; ++i) {
        const double s = grid.s(i);
        // e^F u'' e^{-s} against e^{-u}, with u recovered from w.
        const double u = s - std::log(w[i]);
        const double lhs = std::exp(F[i]) * u_pp[i] * std::exp(-s);
        r = std::max(r, std::abs(lhs - std::exp(-u)));
    }
    return r;
}

FiberGeometry fiberGeometry(const ReducedPotential& u) {
    u.validate();
    const SGrid& g = u.grid;
    const int n = g.n;
    FiberGeometry geo;
    geo.grid = g;
    geo.u_p = derivative1(u.values, g.ds);
    geo.u_pp = derivative2(u.values, g.ds);
    for (int i = 0; i < n; ++i) {
        if (!(geo.u_pp[i] > 0.0)) {
            std::ostringstream os;
            os << "positivity violated: u'' = " << geo.u_pp[i] << " at index " << i;
            throw ValidationError(os.str());
        }
    }
    geo.F.resize(n);
    geo.w.resize(n);
    for (int i = 0; i < n; ++i) {
        const double s = g.s(i);
        geo.F[i] = s - u.values[i] - std::log(geo.u_pp[i]);
        geo.w[i] = std::exp(s - u.values[i]);
    }
    geo.p_half.resize(n - 1);
    geo.w_half.resize(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
        geo.p_half[i] = 0.5 * (geo.w[i] / geo.u_pp[i] + geo.w[i + 1] / geo.u_pp[i + 1]);
        geo.w_half[i] = 0.5 * (geo.w[i] + geo.w[i + 1]);
    }
    geo.quad = trapezoidWeights(g);
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += geo.quad[i] * geo.w[i];
    geo.mass = kTwoPi * m;

    const double wmax = *std::max_element(geo.w.begin(), geo.w.end());
    constexpr double kTailRatio = 1e-5;
    if (geo.w.front() >= kTailRatio * wmax || geo.w.back() >= kTailRatio * wmax) {
        std::ostringstream os;
        os << "measure density not negligible at the truncated ends (w(s_min)/max = "
           << geo.w.front() / wmax << ", w(s_max)/max = " << geo.w.back() / wmax
           << "); widen the s-range";
        throw ValidationError(os.str());
    }
    return geo;
}

ReducedPotential fubiniStudyPotential(const SGrid& g) {
    std::vector<double> v(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double s = g.s(i);
        // 2 log(1 + e^s) without overflow for large s.
        v[i] = s > 0.0 ? 2.0 * (s + std::log1p(std::exp(-s))) : 2.0 * std::log1p(std::exp(s));
    }
    return ReducedPotential::fromSamples(g, std::move(v));
}

struct PotentialInterpolant::Impl {
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
    double s_lo, s_hi;
    double la, lb;  // left tail a + b e^s
    double ra, rb;  // right tail 2s + a + b e^{-s}
};

PotentialInterpolant::PotentialInterpolant(const ReducedPotential& u)
    : impl_(std::make_unique<Impl>()) {
    const SGrid& g = u.grid;
    const auto& v = u.values;
    const int n = g.n;
    Impl& m = *impl_;
    m.s_lo = g.s_min;
    m.s_hi = g.s_max;

    const double e0 = std::exp(g.s(0)), e1 = std::exp(g.s(1));
    m.lb = std::max((v[1] - v[0]) / (e1 - e0), 0.0);
    m.la = v[0] - m.lb * e0;

    const double f0 = std::exp(-g.s(n - 2)), f1 = std::exp(-g.s(n - 1));
    const double r0 = v[n - 2] - 2.0 * g.s(n - 2), r1 = v[n - 1] - 2.0 * g.s(n - 1);
    m.rb = std::max((r1 - r0) / (f1 - f0), 0.0);
    m.ra = r1 - m.rb * f1;

    const double dl = m.lb * std::exp(m.s_lo);
    const double dr = 2.0 - m.rb * std::exp(-m.s_hi);
    m.spline = boost::math::interpolators::cardinal_cubic_b_spline<double>(
        v.data(), v.size(), g.s_min, g.ds, dl, dr);
}

PotentialInterpolant::~PotentialInterpolant() = default;
PotentialInterpolant::PotentialInterpolant(PotentialInterpolant&&) noexcept = default;
PotentialInterpolant& PotentialInterpolant::operator=(PotentialInterpolant&&) noexcept = default;

double PotentialInterpolant::value(double s) const {
    const Impl& m = *impl_;
    if (s < m.s_lo) return m.la + m.lb * std::exp(s);
    if (s > m.s_hi) return 2.0 * s + m.ra + m.rb * std::exp(-s);
    return m.spline(s);
}

double PotentialInterpolant::deriv(double s) const {
    const Impl& m = *impl_;
    if (s < m.s_lo) return m.lb * std::exp(s);
    if (s > m.s_hi) return 2.0 - m.rb * std::exp(-s);
    return m.spline.prime(s);
}

double PotentialInterpolant::deriv2(double s) const {
    const Impl& m = *impl_;
    if (s < m.s_lo) return m.lb * std::exp(s);
    if (s > m.s_hi) return m.rb * std::exp(-s);
    return m.spline.double_prime(s);
}

double PotentialInterpolant::inverseDeriv(double x) const {
    const Impl& m = *impl_;
    if (!(x > 0.0 && x < 2.0))
        throw ValidationError("moment coordinate outside (0, 2)");
    const double dlo = deriv(m.s_lo), dhi = deriv(m.s_hi);
    if (x <= dlo) {
        if (m.lb <= 0.0) throw ValidationError("degenerate left tail");
        return std::log(x / m.lb);
    }
    if (x >= dhi) {
        if (m.rb <= 0.0) throw ValidationError("degenerate right tail");
        return -std::log((2.0 - x) / m.rb);
    }
    // Bracketed solve inside the grid; u' is increasing there.
    auto f = [&](double s) { return deriv(s) - x; };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t it = 200;
    auto r = boost::math::tools::toms748_solve(f, m.s_lo, m.s_hi, dlo - x, dhi - x, tol, it);
    return 0.5 * (r.first + r.second);
}

ReducedPotential pullbackPotential(const ReducedPotential& u, double tau) {
    const SGrid& g = u.grid;
    if (std::abs(tau) > (g.s_max - g.s_min) / 4.0) {
        std::ostringstream os;
        os << "pullback shift |tau| = " << std::abs(tau) << " exceeds a quarter of the s-range";
        throw ValidationError(os.str());
    }
    if (tau == 0.0) return u;
    PotentialInterpolant ip(u);
    std::vector<double> v(g.n);
    for (int i = 0; i < g.n; ++i) v[i] = ip.value(g.s(i) + tau) - tau;
    return ReducedPotential::fromSamples(g, std::move(v));
}

double kahlerVolume(const ReducedPotential& u) {
    const auto upp = derivative2(u.values, u.grid.ds);
    const auto q = trapezoidWeights(u.grid);
    double inner = 0.0;
    for (int i = 0; i < u.grid.n; ++i) inner += q[i] * upp[i];
    PotentialInterpolant ip(u);
    const double left = ip.deriv(u.grid.s_min);
    const double right = 2.0 - ip.deriv(u.grid.s_max);
    return inner + left + right;
}

}  // namespace kelab
