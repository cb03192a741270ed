#include "kelab/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kelab/errors.hpp"

namespace kelab {

double logLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("logLogSlope: need >= 2 points");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

namespace {

int timeIndex(const std::vector<double>& tg, double t) {
    for (std::size_t j = 0; j < tg.size(); ++j)
        if (std::abs(tg[j] - t) < 1e-12) return static_cast<int>(j);
    std::ostringstream os;
    os << "t = " << t << " is not on the time grid";
    throw ConfigError(os.str());
}

std::vector<double> timeDerivativeRow(const SpacetimePotential& u, int j) {
    const int m = u.m(), n = u.grid.n;
    const double dt = u.t_grid[1] - u.t_grid[0];
    const auto& v = u.values;
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
        if (j == 0)
            d[i] = (-3.0 * v[0][i] + 4.0 * v[1][i] - v[2][i]) / (2.0 * dt);
        else if (j == m - 1)
            d[i] = (3.0 * v[m - 1][i] - 4.0 * v[m - 2][i] + v[m - 3][i]) / (2.0 * dt);
        else
            d[i] = (v[j + 1][i] - v[j - 1][i]) / (2.0 * dt);
    }
    return d;
}

double lambdaThreshold(double eps) { return std::max(10.0 * std::pow(eps, 0.9), 1e-3); }

EpsilonTrace sortedByEps(const EpsilonTrace& trace) {
    EpsilonTrace s = trace;
    std::sort(s.begin(), s.end(),
              [](const EpsilonTraceEntry& a, const EpsilonTraceEntry& b) { return a.eps > b.eps; });
    return s;
}

double entryTotal(const EpsilonTraceEntry& e) {
    if (e.total > 0.0) return e.total;
    double s = 0.0;
    for (double v : e.a) s += v * v;
    return s;
}

}  // namespace

EpsilonTraceEntry fiberDecompose(const SpacetimePotential& solution, double t, int k) {
    const int j = timeIndex(solution.t_grid, t);
    EpsilonTraceEntry e;
    e.eps = solution.epsilon;
    e.t = solution.t_grid[j];
    e.geo = fiberGeometry(solution.slice(j));
    const auto op = assembleWeightedLaplacian(e.geo);
    e.pack = eigendecompose(op, e.geo, k);
    e.phi_perp = projectPerp(FiberFunction{solution.grid, timeDerivativeRow(solution, j)}, e.geo);
    e.a.resize(k);
    for (int i = 0; i < k; ++i) {
        e.a[i] = innerProduct(e.phi_perp, e.pack.eigenfunctions[i], e.geo);
        e.mass += e.a[i] * e.a[i];
        e.defect += (e.pack.eigenvalues[i] - 1.0) * e.a[i] * e.a[i];
    }
    e.total = weightedNormSq(e.phi_perp, e.geo);
    e.dbar_total = dbarNormSq(e.phi_perp, e.geo);
    e.holo = holomorphyDefect(splitBox(e.phi_perp, e.geo).field, e.geo);
    return e;
}

bool Prop12Report::allHold() const {
    if (trivial) return false;
    for (std::size_t i = 0; i < eps.size(); ++i)
        if (!cond1[i] || !cond2[i] || !cond3[i]) return false;
    return true;
}

Prop12Report verifyProp12Conditions(const EpsilonTrace& trace, double A, double K, double C,
                                    double trivialFloor) {
    if (trace.size() < 3) throw ConfigError("mass-condition check needs at least 3 ε values");
    const auto tr = sortedByEps(trace);
    Prop12Report r;
    double maxTotal = 0.0;
    for (const auto& e : tr) maxTotal = std::max(maxTotal, entryTotal(e));
    r.trivial = maxTotal < trivialFloor;
    for (const auto& e : tr) {
        const double total = entryTotal(e);
        const double frac = total > 0.0 ? e.mass / total : 0.0;
        r.eps.push_back(e.eps);
        r.mass_fraction.push_back(frac);
        r.cond1.push_back(!r.trivial && total >= trivialFloor && e.mass < A && frac > 0.25);
        const double lamN = e.pack.eigenvalues.empty() ? 0.0 : e.pack.eigenvalues.back();
        r.lambda_N.push_back(lamN);
        r.cond2.push_back(lamN < K);
        const double de = e.defect / e.eps;
        r.defect_over_eps.push_back(de);
        r.fitted_C = std::max(r.fitted_C, de);
        r.cond3.push_back(de <= C);
    }
    return r;
}

bool convergesToOne(const std::vector<double>& eps, const std::vector<double>& lambda) {
    for (std::size_t k = 0; k < eps.size(); ++k)
        if (lambda[k] - 1.0 > lambdaThreshold(eps[k])) return false;
    return true;
}

const char* clusterCaseName(ClusterCase c) {
    switch (c) {
        case ClusterCase::Trivial: return "trivial";
        case ClusterCase::Case1: return "case1";
        case ClusterCase::Case2Sub1: return "case2-sub1";
        case ClusterCase::Case2Sub2: return "case2-sub2";
    }
    return "?";
}

ClusterReport clusterAnalysis(const EpsilonTrace& trace, double blockFraction) {
    if (trace.size() < 3) throw ConfigError("cluster analysis needs at least 3 ε values");
    const auto tr = sortedByEps(trace);
    int kc = static_cast<int>(tr.front().pack.eigenvalues.size());
    for (const auto& e : tr) {
        kc = std::min(kc, static_cast<int>(e.pack.eigenvalues.size()));
        kc = std::min(kc, static_cast<int>(e.a.size()));
    }
    if (kc < 1) throw ConfigError("cluster analysis needs eigenpairs");

    ClusterReport r;
    std::vector<double> eps;
    for (const auto& e : tr) eps.push_back(e.eps);
    r.converging.resize(kc);
    r.lambda_slope.resize(kc);
    for (int i = 0; i < kc; ++i) {
        std::vector<double> lam;
        for (const auto& e : tr) lam.push_back(e.pack.eigenvalues[i]);
        r.converging[i] = convergesToOne(eps, lam);
        const double me = std::accumulate(eps.begin(), eps.end(), 0.0) / eps.size();
        const double ml = std::accumulate(lam.begin(), lam.end(), 0.0) / lam.size();
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t q = 0; q < eps.size(); ++q) {
            sxy += (eps[q] - me) * (lam[q] - ml);
            sxx += (eps[q] - me) * (eps[q] - me);
        }
        r.lambda_slope[i] = sxx > 0.0 ? sxy / sxx : 0.0;
    }
    while (r.k < kc && r.converging[r.k]) ++r.k;
    for (const auto& e : tr) {
        std::vector<double> g;
        for (int i = 0; i + 1 < kc; ++i) g.push_back(e.pack.eigenvalues[i + 1] - e.pack.eigenvalues[i]);
        r.gaps.push_back(std::move(g));
    }

    const auto& last = tr.back();
    for (int i = 0; i < kc; ++i)
        if (last.pack.eigenvalues[i] - 1.0 <= lambdaThreshold(last.eps)) ++r.multiplicity;

    double maxTotal = 0.0;
    for (const auto& e : tr) maxTotal = std::max(maxTotal, entryTotal(e));

    // Blocks at the smallest ε over the indices whose eigenvalue
    // tends to 1: each block carries at least blockFraction of the mass.
    const double lastTotal = entryTotal(last);
    int start = 0;
    while (start < kc && lastTotal > 0.0) {
        double acc = 0.0;
        int K = -1;
        for (int i = start; i < kc; ++i) {
            if (r.converging[i]) acc += last.a[i] * last.a[i];
            if (acc >= blockFraction * lastTotal) {
                K = i + 1;
                break;
            }
        }
        if (K < 0) break;
        r.blocks.push_back(K + 1);  // exclusive, 1-based
        start = K;
    }
    r.cluster_count = static_cast<int>(r.blocks.size());
    r.finiteness_ok = r.cluster_count <= r.multiplicity;
    if (!r.finiteness_ok) {
        std::ostringstream os;
        os << r.cluster_count << " mass-carrying clusters exceed the λ=1 multiplicity "
           << r.multiplicity;
        r.diagnostics.push_back(os.str());
    }

    if (maxTotal < 1e-10) {
        r.kind = ClusterCase::Trivial;
        r.diagnostics.push_back("pi_perp phi' vanishes along the schedule: trivial limit");
    } else if (r.k == 0) {
        r.kind = ClusterCase::Trivial;
        r.diagnostics.push_back("no eigenvalue tends to 1: no holomorphic field");
    } else if (r.k < kc) {
        r.kind = ClusterCase::Case1;
        r.truncation = r.k;
    } else {
        // Every computed eigenvalue tends to 1. Mass escaping past every
        // fixed index is the subcase the argument rules out.
        std::vector<double> captured;
        for (const auto& e : tr) {
            double s = 0.0;
            for (int i = 0; i < kc; ++i) s += e.a[i] * e.a[i];
            captured.push_back(s / entryTotal(e));
        }
        bool decreasing = true;
        for (std::size_t q = 1; q < captured.size(); ++q)
            if (captured[q] > captured[q - 1]) decreasing = false;
        if (captured.back() < blockFraction && decreasing) {
            r.kind = ClusterCase::Case2Sub1;
            r.impossible = true;
            r.diagnostics.push_back(
                "mass escapes past every computed eigen index while all eigenvalues tend to 1; "
                "this subcase cannot occur for a genuine ε-geodesic");
        } else {
            r.kind = ClusterCase::Case2Sub2;
            r.truncation = r.blocks.empty() ? kc : r.blocks.back() - 1;
        }
    }
    for (const auto& e : tr) {
        double s = 0.0;
        for (int i = 0; i < std::min(r.truncation, kc); ++i) s += e.a[i] * e.a[i];
        r.partial_sums.push_back(s);
    }
    return r;
}

ExtractedField extractVectorField(const EpsilonTrace& trace, const ClusterReport& cluster,
                                  const FiberGeometry& limitGeo) {
    if (cluster.kind == ClusterCase::Trivial || cluster.kind == ClusterCase::Case2Sub1 ||
        cluster.truncation < 1)
        throw ValidationError("trivial limit: no vector field to extract");
    const auto tr = sortedByEps(trace);
    const auto& e = tr.back();
    if (e.pack.eigenfunctions.size() < static_cast<std::size_t>(cluster.truncation))
        throw ValidationError("extractVectorField: eigenfunctions missing from the trace");
    const SGrid& g = limitGeo.grid;
    ExtractedField X;
    X.t = e.t;
    X.geo = limitGeo;
    X.u_inf = FiberFunction::zeros(g);
    for (int i = 0; i < cluster.truncation; ++i)
        for (int q = 0; q < g.n; ++q) X.u_inf.values[q] += e.a[i] * e.pack.eigenfunctions[i].values[q];
    X.u_inf = projectPerp(X.u_inf, limitGeo);

    const auto split = splitBox(X.u_inf, limitGeo);
    X.h_inf = split.field.h;
    X.c = weightedIntegral(X.h_inf, limitGeo) / limitGeo.mass;
    X.holoResidual = holomorphyDefect(split.field, limitGeo).l2sq;

    const auto op = assembleWeightedLaplacian(limitGeo);
    FiberFunction r = op.apply(X.u_inf);
    for (int q = 0; q < g.n; ++q) r.values[q] -= X.u_inf.values[q];
    const double un = std::sqrt(weightedNormSq(X.u_inf, limitGeo));
    if (!(un > 0.0)) throw ValidationError("trivial limit: extracted eigenfunction vanishes");
    X.eigenResidual = std::sqrt(weightedNormSq(r, limitGeo)) / un;
    double mK = 0.0;
    for (int i = 0; i < cluster.truncation; ++i) mK += e.a[i] * e.a[i];
    X.norm_fraction = std::sqrt(mK / entryTotal(e));
    return X;
}

GramReport orthogonalityCheck(const std::vector<ExtractedField>& fields) {
    GramReport r;
    const std::size_t n = fields.size();
    if (n == 0) return r;
    const FiberGeometry& geo = fields.front().geo;
    r.gram.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            r.gram[i][j] = innerProduct(fields[i].u_inf, fields[j].u_inf, geo);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j)
                r.max_offdiag = std::max(
                    r.max_offdiag, std::abs(r.gram[i][j]) / std::sqrt(r.gram[i][i] * r.gram[j][j]));
    r.flagged = r.max_offdiag >= 1e-3;
    return r;
}

TimeConstancyReport timeConstancy(const std::map<double, ExtractedField>& fields,
                                  const SpacetimePotential* path) {
    if (fields.size() < 5) throw ConfigError("time constancy needs fields on at least 5 fibers");
    TimeConstancyReport r;
    for (const auto& [t, X] : fields) {
        r.t.push_back(t);
        r.c.push_back(X.c);
    }
    const double n = static_cast<double>(r.c.size());
    r.c_mean = std::accumulate(r.c.begin(), r.c.end(), 0.0) / n;
    double var = 0.0;
    for (double c : r.c) {
        var += (c - r.c_mean) * (c - r.c_mean);
        r.c_maxdev = std::max(r.c_maxdev, std::abs(c - r.c_mean));
    }
    r.c_std = std::sqrt(var / n);

    if (!path) return r;
    const int ns = path->grid.n;
    const double ds = path->grid.ds;
    const double dtp = path->t_grid[1] - path->t_grid[0];
    auto uss = [&](int j, int i) {
        const auto& v = path->values[j];
        return (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (ds * ds);
    };
    auto utt = [&](int j, int i) {
        const auto& v = path->values;
        return (v[j + 1][i] - 2.0 * v[j][i] + v[j - 1][i]) / (dtp * dtp);
    };
    double uts_max = 0.0;
    for (int j = 1; j + 1 < path->m(); ++j)
        for (int i = 1; i + 1 < ns; ++i) {
            const auto& v = path->values;
            uts_max = std::max(uts_max, std::abs((v[j + 1][i + 1] - v[j + 1][i - 1] -
                                                  v[j - 1][i + 1] + v[j - 1][i - 1]) /
                                                 (4.0 * dtp * ds)));
        }
    std::vector<const ExtractedField*> fx;
    for (const auto& kv : fields) fx.push_back(&kv.second);
    for (std::size_t k = 1; k + 1 < fx.size(); ++k) {
        const int jm = timeIndex(path->t_grid, fx[k - 1]->t);
        const int j0 = timeIndex(path->t_grid, fx[k]->t);
        const int jp = timeIndex(path->t_grid, fx[k + 1]->t);
        if (j0 <= 0 || j0 + 1 >= path->m()) continue;
        const double span = fx[k + 1]->t - fx[k - 1]->t;
        for (int i = 2; i + 2 < ns; ++i) {
            const double dh = (fx[k + 1]->h_inf.values[i] - fx[k - 1]->h_inf.values[i]) / span;
            r.field_drift = std::max(r.field_drift, std::abs(uss(j0, i) * dh));
            const double dflux =
                (uss(jp, i) * fx[k + 1]->h_inf.values[i] - uss(jm, i) * fx[k - 1]->h_inf.values[i]) /
                span;
            const double dutt = (utt(j0, i + 1) - utt(j0, i - 1)) / (2.0 * ds);
            r.transport_residual = std::max(r.transport_residual, std::abs(dflux - dutt));
        }
    }
    if (uts_max > 0.0) {
        r.field_drift /= uts_max;
        r.transport_residual /= uts_max;
    }
    return r;
}

double vectorFieldIdentityResidual(const SpacetimePotential& path) {
    const int m = path.m(), n = path.grid.n;
    const double dt = path.t_grid[1] - path.t_grid[0], ds = path.grid.ds;
    const auto& v = path.values;
    auto uts = [&](int j, int i) {
        return (v[j + 1][i + 1] - v[j + 1][i - 1] - v[j - 1][i + 1] + v[j - 1][i - 1]) /
               (4.0 * dt * ds);
    };
    auto uss = [&](int j, int i) { return (v[j][i + 1] - 2.0 * v[j][i] + v[j][i - 1]) / (ds * ds); };
    double res = 0.0, scale = 0.0;
    for (int j = 1; j + 1 < m; ++j) {
        for (int i = 2; i + 2 < n; ++i) {
            const double a = uts(j, i), b = uss(j, i);
            const double h = a / b;
            const double qp = uts(j, i + 1) * uts(j, i + 1) / uss(j, i + 1);
            const double qm = uts(j, i - 1) * uts(j, i - 1) / uss(j, i - 1);
            const double lhs = (qp - qm) / (2.0 * ds);
            const double utss = (uts(j, i + 1) - uts(j, i - 1)) / (2.0 * ds);
            res = std::max(res, std::abs(lhs - h * utss));
            scale = std::max(scale, std::abs(h * utss));
        }
    }
    return scale > 0.0 ? res / scale : res;
}

std::vector<double> weakProductDiagnostic(const EpsilonTrace& trace, const FiberGeometry& limitGeo,
                                          const FiberFunction& limitH) {
    const auto tr = sortedByEps(trace);
    const SGrid& g = limitGeo.grid;
    std::vector<double> centers;
    for (double c = -6.0; c <= 6.0 + 1e-12; c += 1.0) centers.push_back(c);
    std::vector<double> out;
    for (const auto& e : tr) {
        if (e.phi_perp.values.empty()) throw ConfigError("weak product diagnostic needs fiber data");
        const auto h = splitBox(e.phi_perp, e.geo).field.h;
        double worst = 0.0;
        for (double c : centers) {
            double acc = 0.0;
            for (int i = 0; i < g.n; ++i) {
                const double sech = 1.0 / std::cosh(g.s(i) - c);
                const double diff = e.geo.u_pp[i] * h.values[i] - limitGeo.u_pp[i] * limitH.values[i];
                acc += limitGeo.quad[i] * sech * sech * diff;
            }
            worst = std::max(worst, std::abs(acc));
        }
        out.push_back(worst);
    }
    return out;
}

AutomorphismReport reconstructAutomorphism(double c, const ReducedPotential& u0,
                                           const ReducedPotential& u1, double tol) {
    AutomorphismReport r;
    r.c = c;
    r.a = std::exp(0.5 * c);
    try {
        const auto back = pullbackPotential(u1, -c);
        double lo = INFINITY, hi = -INFINITY;
        for (int i = 0; i < u0.grid.n; ++i) {
            const double d = back.values[i] - u0.values[i];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        r.endpoint_error = hi - lo;
    } catch (const ValidationError&) {
        r.endpoint_error = INFINITY;
    }
    r.matches = r.endpoint_error < tol;
    return r;
}

AutomorphismReport reconstructAutomorphism(const ExtractedField& field, const ReducedPotential& u0,
                                           const ReducedPotential& u1, double tol) {
    return reconstructAutomorphism(field.c, u0, u1, tol);
}

}  // namespace kelab
