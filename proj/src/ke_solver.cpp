#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseLU>
#include <Eigen/Sparse>

#include "kelab/errors.hpp"
#include "kelab/geodesic.hpp"

namespace kelab {

namespace {

// Lagrange weights for value and first derivative at x = 0 from the six
// nodes nearest to it.
struct PinStencil {
    std::vector<int> idx;
    std::vector<double> val, der;
};

PinStencil pinStencil(const SGrid& g) {
    const int c = static_cast<int>(std::floor(-g.s_min / g.ds));
    int lo = std::clamp(c - 2, 0, g.n - 6);
    PinStencil p;
    for (int j = lo; j < lo + 6; ++j) p.idx.push_back(j);
    const int k = 6;
    p.val.assign(k, 0.0);
    p.der.assign(k, 0.0);
    for (int a = 0; a < k; ++a) {
        const double xa = g.s(p.idx[a]);
        double prod = 1.0;
        for (int b = 0; b < k; ++b)
            if (b != a) prod *= (0.0 - g.s(p.idx[b])) / (xa - g.s(p.idx[b]));
        p.val[a] = prod;
        double d = 0.0;
        for (int m = 0; m < k; ++m) {
            if (m == a) continue;
            double term = 1.0 / (xa - g.s(p.idx[m]));
            for (int b = 0; b < k; ++b)
                if (b != a && b != m) term *= (0.0 - g.s(p.idx[b])) / (xa - g.s(p.idx[b]));
            d += term;
        }
        p.der[a] = d;
    }
    return p;
}

struct KeSystem {
    SGrid g;
    PinStencil pin;
    std::vector<double> beta;  // quadrature weights with the tail masses folded in

    explicit KeSystem(const SGrid& grid) : g(grid), pin(pinStencil(grid)) {
        beta = trapezoidWeights(g);
        beta.front() += 1.0;
        beta.back() += 1.0;
    }

    double normalizer(const std::vector<double>& E) const {
        double I = 0.0;
        for (int k = 0; k < g.n; ++k) I += beta[k] * E[k];
        return I;
    }

    std::vector<double> expw(const std::vector<double>& u) const {
        std::vector<double> E(g.n);
        for (int k = 0; k < g.n; ++k) E[k] = std::exp(g.s(k) - u[k]);
        return E;
    }

    std::vector<double> residual(const std::vector<double>& u) const {
        const int n = g.n;
        const double h2 = g.ds * g.ds;
        const auto E = expw(u);
        const double C = 2.0 / normalizer(E);
        std::vector<double> r(n);
        for (int i = 1; i + 1 < n; ++i) {
            const double N = (E[i + 1] + 10.0 * E[i] + E[i - 1]) / 12.0;
            r[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2 - C * N;
        }
        double v = -2.0 * std::log(2.0), d = -1.0;
        for (std::size_t a = 0; a < pin.idx.size(); ++a) {
            v += pin.val[a] * u[pin.idx[a]];
            d += pin.der[a] * u[pin.idx[a]];
        }
        r[0] = v;
        r[n - 1] = d;
        return r;
    }
};

double supNorm(const std::vector<double>& r) {
    double m = 0.0;
    for (double v : r) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> defaultGuess(const SGrid& g) {
    std::vector<double> u(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double s2 = 2.0 * g.s(i);
        u[i] = (s2 > 0.0 ? s2 + std::log1p(std::exp(-s2)) : std::log1p(std::exp(s2))) +
               std::log(2.0);
    }
    return u;
}

}  // namespace

double keNormalizer(const ReducedPotential& u) {
    KeSystem sys(u.grid);
    return sys.normalizer(sys.expw(u.values));
}

double keResidualNumerov(const ReducedPotential& u) {
    KeSystem sys(u.grid);
    auto r = sys.residual(u.values);
    r.front() = 0.0;
    r.back() = 0.0;
    return supNorm(r);
}

double keResidual(const ReducedPotential& u) {
    KeSystem sys(u.grid);
    const auto E = sys.expw(u.values);
    const double C = 2.0 / sys.normalizer(E);
    const double h2 = u.grid.ds * u.grid.ds;
    double m = 0.0;
    for (int i = 1; i + 1 < u.grid.n; ++i) {
        const double r =
            (u.values[i + 1] - 2.0 * u.values[i] + u.values[i - 1]) / h2 - C * E[i];
        m = std::max(m, std::abs(r));
    }
    return m;
}

ReducedPotential solveKE(const SGrid& grid, double tol, const KeSolveOptions& opt,
                         KeSolveInfo* info) {
    if (!(tol > 0.0)) throw ConfigError("solveKE: tolerance must be positive");
    const int n = grid.n;
    const double h2 = grid.ds * grid.ds;
    KeSystem sys(grid);

    std::vector<double> u;
    if (opt.initial) {
        if (!opt.initial->grid.sameAs(grid)) throw ConfigError("solveKE: initial guess grid mismatch");
        u = opt.initial->values;
    } else {
        u = defaultGuess(grid);
    }

    KeSolveInfo local;
    KeSolveInfo& inf = info ? *info : local;
    inf = KeSolveInfo{};
    auto r = sys.residual(u);
    double rn = supNorm(r);
    inf.history.push_back(rn);

    using SpMat = Eigen::SparseMatrix<double>;
    for (int it = 0; it < opt.max_iter && rn >= tol; ++it) {
        const auto E = sys.expw(u);
        const double I = sys.normalizer(E);
        const double C = 2.0 / I;

        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(3 * n + 12);
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b(n), rhs(n);
        for (int i = 1; i + 1 < n; ++i) {
            trip.emplace_back(i, i - 1, 1.0 / h2 + C * E[i - 1] / 12.0);
            trip.emplace_back(i, i, -2.0 / h2 + C * 10.0 * E[i] / 12.0);
            trip.emplace_back(i, i + 1, 1.0 / h2 + C * E[i + 1] / 12.0);
            a[i] = -(E[i + 1] + 10.0 * E[i] + E[i - 1]) / 12.0;
        }
        for (std::size_t k = 0; k < sys.pin.idx.size(); ++k) {
            trip.emplace_back(0, sys.pin.idx[k], sys.pin.val[k]);
            trip.emplace_back(n - 1, sys.pin.idx[k], sys.pin.der[k]);
        }
        for (int k = 0; k < n; ++k) {
            b[k] = C * sys.beta[k] * E[k] / I;
            rhs[k] = -r[k];
        }
        SpMat J(n, n);
        J.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<SpMat> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) throw SolverError("solveKE: singular Jacobian");
        // (J + a b^T) d = rhs via Sherman-Morrison.
        const Eigen::VectorXd y = lu.solve(rhs);
        const Eigen::VectorXd z = lu.solve(a);
        const double denom = 1.0 + b.dot(z);
        const Eigen::VectorXd d = y - z * (b.dot(y) / denom);

        double lam = 1.0;
        bool accepted = false;
        while (lam >= 1.0 / 1024.0) {
            std::vector<double> trial(u);
            for (int k = 0; k < n; ++k) trial[k] += lam * d[k];
            const auto rt = sys.residual(trial);
            const double rtn = supNorm(rt);
            if (std::isfinite(rtn) && rtn < (1.0 - 1e-4 * lam) * rn) {
                u = std::move(trial);
                r = rt;
                rn = rtn;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        inf.iterations = it + 1;
        inf.history.push_back(rn);
        if (!accepted) break;
    }
    inf.residual = rn;
    if (!(rn < tol)) {
        std::ostringstream os;
        os << "solveKE: Newton did not converge (residual " << rn << " after " << inf.iterations
           << " iterations)";
        throw SolverError(os.str());
    }
    try {
        return ReducedPotential::fromSamples(grid, std::move(u));
    } catch (const ValidationError& e) {
        throw SolverError(std::string("solveKE: converged to an invalid potential: ") + e.what());
    }
}

}  // namespace kelab
