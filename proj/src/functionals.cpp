#include "kelab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <utility>

#include "kelab/errors.hpp"
#include "kelab/quadrature.hpp"

namespace kelab {

void PathOfPotentials::validate() const {
    if (fibers.size() != t_grid.size())
        throw ValidationError("path: t grid and fiber count differ");
    if (fibers.size() < 3) throw ValidationError("path needs at least 3 fibers");
    for (std::size_t j = 0; j < fibers.size(); ++j) {
        if (!fibers[j].grid.sameAs(reference.grid))
            throw ValidationError("path: fiber grid differs from reference grid");
    }
}

namespace {

// Fourth-order u'' in the interior. The energy pairs it against the exact
// weight e^{s-u}; a second-order u'' would leave an O(ds^2) first variation
// at KE potentials.
std::vector<double> secondDerivative4(const std::vector<double>& f, double ds) {
    auto d = derivative2(f, ds);
    const int n = static_cast<int>(f.size());
    const double c = 1.0 / (12.0 * ds * ds);
    for (int i = 2; i + 2 < n; ++i)
        d[i] = c * (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]);
    return d;
}

// Masses of u'' beyond the grid: u'(s_min) on the left, 2 - u'(s_max) on the right.
std::pair<double, double> curvatureTails(const std::vector<double>& u, double ds) {
    const auto d1 = derivative1(u, ds);
    return {d1.front(), 2.0 - d1.back()};
}

// int g u'' ds plus the tails, with g frozen at its end values there.
double curvaturePairing(const std::vector<double>& g, const std::vector<double>& upp,
                        const std::vector<double>& q, std::pair<double, double> tails) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += q[i] * g[i] * upp[i];
    return s + g.front() * tails.first + g.back() * tails.second;
}

// w = e^{s-u} decays like e^{s} on the left and e^{-s} on the right, so the
// tail integrals equal the end values.
double weightPairing(const std::vector<double>& g, const FiberGeometry& geo) {
    double s = 0.0;
    for (int i = 0; i < geo.grid.n; ++i) s += geo.quad[i] * g[i] * geo.w[i];
    return s + g.front() * geo.w.front() + g.back() * geo.w.back();
}

}  // namespace

double energyE(const ReducedPotential& u, const ReducedPotential& u0) {
    if (!u.grid.sameAs(u0.grid)) throw ValidationError("energyE: grid mismatch");
    const double ds = u.grid.ds;
    const auto q = trapezoidWeights(u.grid);
    std::vector<double> diff(u.grid.n);
    for (int i = 0; i < u.grid.n; ++i) diff[i] = u.values[i] - u0.values[i];
    const double a = curvaturePairing(diff, secondDerivative4(u.values, ds), q, curvatureTails(u.values, ds));
    const double b = curvaturePairing(diff, secondDerivative4(u0.values, ds), q, curvatureTails(u0.values, ds));
    return 0.5 * kTwoPi * (a + b) / kVolume;
}

double fFunctional(const ReducedPotential& u) {
    const auto q = trapezoidWeights(u.grid);
    double s = 0.0;
    for (int i = 0; i < u.grid.n; ++i) s += q[i] * std::exp(u.grid.s(i) - u.values[i]);
    s += std::exp(u.grid.s_min - u.values.front()) + std::exp(u.grid.s_max - u.values.back());
    return -std::log(kTwoPi * s);
}

double dingFunctional(const ReducedPotential& u, const ReducedPotential& u0) {
    return -energyE(u, u0) + fFunctional(u);
}

std::vector<FiberGeometry> pathGeometries(const PathOfPotentials& path) {
    std::vector<FiberGeometry> g;
    g.reserve(path.fibers.size());
    for (const auto& u : path.fibers) g.push_back(fiberGeometry(u));
    return g;
}

namespace {

// Second-order first and second time derivatives of the column values.
void timeDerivatives(const PathOfPotentials& path, double dt,
                     std::vector<std::vector<double>>& ut,
                     std::vector<std::vector<double>>& utt) {
    const std::size_t m = path.fibers.size();
    const int n = path.reference.grid.n;
    ut.assign(m, std::vector<double>(n));
    utt.assign(m, std::vector<double>(n));
    std::vector<double> col(m);
    for (int i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) col[j] = path.fibers[j].values[i];
        const auto d1 = derivative1(col, dt);
        std::vector<double> d2(m);
        if (m >= 4) {
            d2 = derivative2(col, dt);
        } else {
            const double c = (col[2] - 2.0 * col[1] + col[0]) / (dt * dt);
            d2.assign(m, c);
        }
        for (std::size_t j = 0; j < m; ++j) {
            ut[j][i] = d1[j];
            utt[j][i] = d2[j];
        }
    }
}

}  // namespace

DingReport dingDerivatives(const PathOfPotentials& path, const std::vector<FiberGeometry>& geoms) {
    path.validate();
    const std::size_t m = path.fibers.size();
    if (geoms.size() != m) throw ValidationError("dingDerivatives: geometry count mismatch");
    const double dt = path.t_grid[1] - path.t_grid[0];
    if (!(dt > 0.0)) throw ValidationError("dingDerivatives: t grid must increase");
    const SGrid& g = path.reference.grid;
    const int n = g.n;

    std::vector<std::vector<double>> ut, utt;
    timeDerivatives(path, dt, ut, utt);

    DingReport rep;
    rep.rows.resize(m);
    std::vector<double> Dvals(m);
    for (std::size_t j = 0; j < m; ++j) {
        const FiberGeometry& geo = geoms[j];
        DingRow& r = rep.rows[j];
        r.t = path.t_grid[j];
        r.E = energyE(path.fibers[j], path.reference);
        r.F = fFunctional(path.fibers[j]);
        r.D = -r.E + r.F;
        Dvals[j] = r.D;
        r.c_t = geo.mass;

        FiberFunction v{g, ut[j]};
        const auto& uj = path.fibers[j].values;
        const double vomega = kTwoPi * curvaturePairing(v.values, secondDerivative4(uj, g.ds), geo.quad,
                                                        curvatureTails(uj, g.ds));
        const std::vector<double> one(n, 1.0);
        r.Dprime = -vomega / kVolume + weightPairing(v.values, geo) / weightPairing(one, geo);

        const auto vs = derivative1(v.values, g.ds);
        FiberFunction f{g, std::vector<double>(n)};
        for (int i = 0; i < n; ++i) f.values[i] = utt[j][i] - vs[i] * vs[i] / geo.u_pp[i];
        double fomega = 0.0;
        for (int i = 0; i < n; ++i) fomega += geo.quad[i] * f.values[i] * geo.u_pp[i];
        r.int_f_omega = kTwoPi * fomega;
        r.int_f_exp = weightedIntegral(f, geo);
        const auto vp = projectPerp(v, geo);
        r.int_delta_exp = dbarNormSq(vp, geo) - weightedNormSq(vp, geo);
        r.Dsecond = -r.int_f_omega / kVolume + (r.int_f_exp + r.int_delta_exp) / geo.mass;
    }
    const auto dfd = derivative1(Dvals, dt);
    for (std::size_t j = 0; j < m; ++j) rep.rows[j].Dprime_fd = dfd[j];
    return rep;
}

double DingReport::maxDprimeMismatch() const {
    double r = 0.0;
    for (const auto& row : rows) r = std::max(r, std::abs(row.Dprime - row.Dprime_fd));
    return r;
}

double DingReport::minDsecond() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) r = std::min(r, row.Dsecond);
    return r;
}

std::string DingReport::toCsv() const {
    std::string out = "t,E,F,D,Dprime,Dsecond,c_t,int_f_omega,int_f_exp,int_delta_exp\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.E,
                      r.F, r.D, r.Dprime, r.Dsecond, r.c_t, r.int_f_omega, r.int_f_exp,
                      r.int_delta_exp);
        out += buf;
    }
    return out;
}

DingReport DingReport::fromCsv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,E,F,D", 0) != 0)
        throw ValidationError("Ding CSV: missing header");
    DingReport rep;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        DingRow r;
        double* fields[] = {&r.t, &r.E, &r.F, &r.D, &r.Dprime, &r.Dsecond,
                            &r.c_t, &r.int_f_omega, &r.int_f_exp, &r.int_delta_exp};
        std::istringstream ls(line);
        std::string cell;
        int k = 0;
        while (std::getline(ls, cell, ',')) {
            if (k >= 10) throw ValidationError("Ding CSV: too many columns");
            try {
                *fields[k++] = std::stod(cell);
            } catch (const std::exception&) {
                throw ValidationError("Ding CSV: bad number '" + cell + "'");
            }
        }
        if (k != 10) throw ValidationError("Ding CSV: expected 10 columns");
        r.Dprime_fd = std::numeric_limits<double>::quiet_NaN();
        rep.rows.push_back(r);
    }
    return rep;
}

std::vector<double> defectDensity(const DingReport& report) {
    std::vector<double> g(report.rows.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const auto& r = report.rows[j];
        g[j] = (r.int_f_exp + r.int_delta_exp) / r.c_t;
    }
    return g;
}

namespace {

double trapezoidT(const std::vector<double>& t, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < t.size(); ++j) s += 0.5 * (t[j + 1] - t[j]) * (f[j] + f[j + 1]);
    return s;
}

}  // namespace

IntegratedDefect integratedDefect(const DingReport& report) {
    std::vector<double> t, a, b;
    for (const auto& r : report.rows) {
        t.push_back(r.t);
        a.push_back(r.int_f_exp / r.c_t);
        b.push_back(r.int_delta_exp / r.c_t);
    }
    return {trapezoidT(t, a), trapezoidT(t, b)};
}

double FatouSelection::selectedFraction() const {
    if (flagged.empty()) return 0.0;
    const auto ok = std::count(flagged.begin(), flagged.end(), false);
    return static_cast<double>(ok) / flagged.size();
}

FatouSelection fatouSubsequence(const std::map<double, std::vector<double>>& values,
                                const std::vector<double>& t, double markovFraction) {
    if (values.empty()) throw ValidationError("fatouSubsequence: no ε values");
    FatouSelection sel;
    sel.t = t;
    for (const auto& [eps, G] : values) {
        if (G.size() != t.size()) throw ValidationError("fatouSubsequence: length mismatch");
        sel.A = std::max(sel.A, trapezoidT(t, G) / eps);
    }
    // Markov: the set where G/ε exceeds A/δ has measure at most δ.
    sel.cutoff = sel.A / markovFraction;
    const double eps_min = values.begin()->first;
    sel.selected.resize(t.size());
    sel.C_t.assign(t.size(), 0.0);
    sel.flagged.assign(t.size(), false);
    for (std::size_t j = 0; j < t.size(); ++j) {
        bool reachesMin = false;
        for (const auto& [eps, G] : values) {
            const double r = G[j] / eps;
            if (r <= sel.cutoff) {
                sel.selected[j].push_back(eps);
                sel.C_t[j] = std::max(sel.C_t[j], r);
                if (eps == eps_min) reachesMin = true;
            }
        }
        sel.flagged[j] = !reachesMin;
        if (sel.flagged[j]) sel.C_t[j] = std::numeric_limits<double>::infinity();
    }
    return sel;
}

}  // namespace kelab
