#include <algorithm>
#include <cmath>
#include <sstream>

#include <lapacke.h>

#include "kelab/errors.hpp"
#include "kelab/geodesic.hpp"
#include "kelab/kernels.hpp"

namespace kelab {

ReducedPotential SpacetimePotential::slice(int j) const {
    return ReducedPotential::fromSamples(grid, values.at(j));
}

PathOfPotentials SpacetimePotential::asPath() const {
    PathOfPotentials p;
    p.t_grid = t_grid;
    for (int j = 0; j < m(); ++j) p.fibers.push_back(slice(j));
    p.reference = p.fibers.front();
    return p;
}

namespace {

kernels::MaStencil stencilFor(const SpacetimePotential& u) {
    const double dt = u.t_grid[1] - u.t_grid[0];
    const double ds = u.grid.ds;
    return {1.0 / (dt * dt), 1.0 / (ds * ds), 1.0 / (4.0 * dt * ds), u.epsilon};
}

std::vector<double> backgroundDensity(const ReducedPotential& h) {
    return derivative2(h.values, h.grid.ds);
}

}  // namespace

double SpacetimePotential::maResidual() const {
    const int n = grid.n;
    const auto hpp = backgroundDensity(background);
    const auto st = stencilFor(*this);
    std::vector<double> r(n, 0.0);
    double mx = 0.0;
    for (int j = 1; j + 1 < m(); ++j) {
        kernels::maResidualRow(values[j - 1].data(), values[j].data(), values[j + 1].data(),
                               hpp.data(), st, r.data(), n);
        for (int i = 1; i + 1 < n; ++i) mx = std::max(mx, std::abs(r[i]));
    }
    return mx;
}

double SpacetimePotential::minSpacetimeDet() const {
    const int n = grid.n;
    std::vector<double> zero(n, 0.0), r(n, 0.0);
    auto st = stencilFor(*this);
    st.eps = 0.0;
    double mn = INFINITY;
    for (int j = 1; j + 1 < m(); ++j) {
        kernels::maResidualRow(values[j - 1].data(), values[j].data(), values[j + 1].data(),
                               zero.data(), st, r.data(), n);
        for (int i = 1; i + 1 < n; ++i) mn = std::min(mn, r[i]);
    }
    return mn;
}

std::vector<std::vector<double>> geodesicDefect(const SpacetimePotential& u) {
    const int n = u.grid.n, m = u.m();
    const double dt = u.t_grid[1] - u.t_grid[0], ds = u.grid.ds;
    std::vector<std::vector<double>> f(m, std::vector<double>(n, 0.0));
    const auto& v = u.values;
    for (int j = 1; j + 1 < m; ++j) {
        for (int i = 1; i + 1 < n; ++i) {
            const double utt = (v[j + 1][i] - 2.0 * v[j][i] + v[j - 1][i]) / (dt * dt);
            const double uss = (v[j][i + 1] - 2.0 * v[j][i] + v[j][i - 1]) / (ds * ds);
            const double uts =
                (v[j + 1][i + 1] - v[j + 1][i - 1] - v[j - 1][i + 1] + v[j - 1][i - 1]) /
                (4.0 * dt * ds);
            f[j][i] = utt - uts * uts / uss;
        }
    }
    return f;
}

namespace {

// Interior unknowns (j = 1..m-2, i = 1..n-2), time index fastest so the
// Jacobian is banded with half-bandwidth m-1. The two outermost s-nodes of
// each interior slice follow the exponential tails of the potential:
//   u_0     = u_1 + (u_1 - u_2) q
//   u_{n-1} = u_{n-2} + 2 ds + (u_{n-2} - u_{n-3} - 2 ds) q,   q = e^{-ds}.
class EpsSystem {
public:
    EpsSystem(int m, int n, double ds) : m_(m), n_(n), mi_(m - 2), ni_(n - 2), q_(std::exp(-ds)), ds_(ds) {
        kl_ = mi_ + 1;
        ku_ = mi_ + 1;
        ldab_ = 2 * kl_ + ku_ + 1;
        N_ = static_cast<lapack_int>(mi_) * ni_;
    }

    lapack_int size() const { return N_; }
    lapack_int index(int j, int i) const { return static_cast<lapack_int>(i - 1) * mi_ + (j - 1); }

    void applyTails(std::vector<std::vector<double>>& U) const {
        for (int j = 1; j + 1 < m_; ++j) {
            auto& r = U[j];
            r[0] = (1.0 + q_) * r[1] - q_ * r[2];
            r[n_ - 1] = (1.0 + q_) * r[n_ - 2] - q_ * r[n_ - 3] + 2.0 * ds_ * (1.0 - q_);
        }
    }

    void zeroBand(std::vector<double>& ab) const {
        ab.assign(static_cast<std::size_t>(ldab_) * N_, 0.0);
    }

    void add(std::vector<double>& ab, lapack_int row, int j, int i, double c) const {
        if (j == 0 || j == m_ - 1) return;
        if (i == 0) {
            add(ab, row, j, 1, (1.0 + q_) * c);
            add(ab, row, j, 2, -q_ * c);
            return;
        }
        if (i == n_ - 1) {
            add(ab, row, j, n_ - 2, (1.0 + q_) * c);
            add(ab, row, j, n_ - 3, -q_ * c);
            return;
        }
        const lapack_int col = index(j, i);
        ab[static_cast<std::size_t>(kl_ + ku_ + row - col) + static_cast<std::size_t>(col) * ldab_] += c;
    }

    int kl() const { return kl_; }
    int ku() const { return ku_; }
    int ldab() const { return ldab_; }

private:
    int m_, n_, mi_, ni_;
    double q_, ds_;
    int kl_, ku_, ldab_;
    lapack_int N_;
};

double residualInto(const std::vector<std::vector<double>>& U, const std::vector<double>& hpp,
                    const kernels::MaStencil& st, std::vector<std::vector<double>>& R) {
    const int m = static_cast<int>(U.size());
    const int n = static_cast<int>(hpp.size());
    double mx = 0.0;
    for (int j = 1; j + 1 < m; ++j) {
        kernels::maResidualRow(U[j - 1].data(), U[j].data(), U[j + 1].data(), hpp.data(), st,
                               R[j].data(), n);
        for (int i = 1; i + 1 < n; ++i) {
            const double a = std::abs(R[j][i]);
            if (!(a <= mx)) mx = a;  // propagates NaN
        }
    }
    return mx;
}

bool convexSlices(const std::vector<std::vector<double>>& U) {
    const int m = static_cast<int>(U.size());
    const int n = static_cast<int>(U[0].size());
    for (int j = 1; j + 1 < m; ++j)
        for (int i = 1; i + 1 < n; ++i)
            if (!(U[j][i + 1] - 2.0 * U[j][i] + U[j][i - 1] > 0.0)) return false;
    return true;
}

}  // namespace

SpacetimePotential solveEpsilonGeodesic(const ReducedPotential& u0, const ReducedPotential& u1,
                                        double eps, const std::vector<double>& t_grid,
                                        const SGrid& s_grid, double tol,
                                        const EpsGeodesicOptions& opt, EpsGeodesicInfo* info) {
    if (!(eps > 0.0)) throw ConfigError("solveEpsilonGeodesic: ε must be positive");
    if (!(tol > 0.0)) throw ConfigError("solveEpsilonGeodesic: tolerance must be positive");
    if (!u0.grid.sameAs(s_grid) || !u1.grid.sameAs(s_grid))
        throw ConfigError("solveEpsilonGeodesic: boundary fibers are not on the s-grid");
    u0.validate();
    u1.validate();
    const int m = static_cast<int>(t_grid.size());
    if (m < 3) throw ConfigError("solveEpsilonGeodesic: need at least 3 time samples");
    const int n = s_grid.n;
    const double dt = t_grid[1] - t_grid[0];
    for (int j = 0; j < m; ++j) {
        if (std::abs(t_grid[j] - j * dt) > 1e-12 || t_grid.front() != 0.0 || t_grid.back() != 1.0)
            throw ConfigError("solveEpsilonGeodesic: t grid must be uniform on [0, 1]");
    }

    SpacetimePotential sol;
    if (opt.initial) {
        if (opt.initial->m() != m || !opt.initial->grid.sameAs(s_grid))
            throw ConfigError("solveEpsilonGeodesic: initial guess has the wrong shape");
        sol = *opt.initial;
    } else {
        sol = legendrePath(u0, u1, t_grid);
    }
    sol.t_grid = t_grid;
    sol.grid = s_grid;
    sol.epsilon = eps;
    sol.background = fubiniStudyPotential(s_grid);
    sol.values.front() = u0.values;
    sol.values.back() = u1.values;
    auto& U = sol.values;

    const auto hpp = backgroundDensity(sol.background);
    const auto st = stencilFor(sol);
    EpsSystem sys(m, n, s_grid.ds);
    sys.applyTails(U);

    std::vector<std::vector<double>> R(m, std::vector<double>(n, 0.0)), Rt = R;
    double rn = residualInto(U, hpp, st, R);

    EpsGeodesicInfo local;
    EpsGeodesicInfo& inf = info ? *info : local;
    inf = EpsGeodesicInfo{};
    inf.history.push_back(rn);

    const lapack_int N = sys.size();
    std::vector<double> ab, rhs(N);
    std::vector<lapack_int> ipiv(N);
    const double idt2 = st.inv_dt2, ids2 = st.inv_ds2, i4 = st.inv_4dtds;

    for (int it = 0; it < opt.max_iter && rn >= tol; ++it) {
        sys.zeroBand(ab);
        for (int j = 1; j + 1 < m; ++j) {
            const auto& a = U[j - 1];
            const auto& b = U[j];
            const auto& c = U[j + 1];
            for (int i = 1; i + 1 < n; ++i) {
                const double A = (c[i] - 2.0 * b[i] + a[i]) * idt2;
                const double B = (b[i + 1] - 2.0 * b[i] + b[i - 1]) * ids2;
                const double C = (c[i + 1] - c[i - 1] - a[i + 1] + a[i - 1]) * i4;
                const lapack_int row = sys.index(j, i);
                sys.add(ab, row, j, i, -2.0 * B * idt2 - 2.0 * A * ids2);
                sys.add(ab, row, j - 1, i, B * idt2);
                sys.add(ab, row, j + 1, i, B * idt2);
                sys.add(ab, row, j, i - 1, A * ids2);
                sys.add(ab, row, j, i + 1, A * ids2);
                const double x = 2.0 * C * i4;
                sys.add(ab, row, j + 1, i + 1, -x);
                sys.add(ab, row, j + 1, i - 1, x);
                sys.add(ab, row, j - 1, i + 1, x);
                sys.add(ab, row, j - 1, i - 1, -x);
                rhs[row] = -R[j][i];
            }
        }
        const lapack_int info_lu = LAPACKE_dgbsv(LAPACK_COL_MAJOR, N, sys.kl(), sys.ku(), 1,
                                                 ab.data(), sys.ldab(), ipiv.data(), rhs.data(), N);
        if (info_lu != 0) {
            std::ostringstream os;
            os << "solveEpsilonGeodesic: banded factorization failed (info = " << info_lu << ")";
            throw SolverError(os.str());
        }

        double lam = 1.0;
        bool accepted = false;
        std::vector<std::vector<double>> trial;
        while (lam >= opt.min_damping) {
            trial = U;
            for (int j = 1; j + 1 < m; ++j)
                for (int i = 1; i + 1 < n; ++i) trial[j][i] += lam * rhs[sys.index(j, i)];
            sys.applyTails(trial);
            if (convexSlices(trial)) {
                const double rt = residualInto(trial, hpp, st, Rt);
                if (rt < (1.0 - 1e-4 * lam) * rn) {
                    U.swap(trial);
                    R.swap(Rt);
                    rn = rt;
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        inf.iterations = it + 1;
        inf.history.push_back(rn);
        inf.damping.push_back(accepted ? lam : 0.0);
        if (!accepted) break;
    }
    inf.residual = rn;
    if (!(rn < tol)) {
        std::ostringstream os;
        os << "solveEpsilonGeodesic: no convergence at ε = " << eps << " (residual " << rn
           << " after " << inf.iterations << " iterations)";
        throw SolverError(os.str());
    }
    for (int j = 1; j + 1 < m; ++j) {
        try {
            ReducedPotential::fromSamples(s_grid, U[j]);
        } catch (const ValidationError& e) {
            throw SolverError(std::string("solveEpsilonGeodesic: invalid interior slice: ") + e.what());
        }
    }
    return sol;
}

ChenBoundsReport verifyChenBounds(const std::map<double, SpacetimePotential>& solutions) {
    if (solutions.size() < 2) throw ConfigError("verifyChenBounds: need at least 2 ε values");
    ChenBoundsReport rep;
    for (auto it = solutions.rbegin(); it != solutions.rend(); ++it) {
        const SpacetimePotential& u = it->second;
        const int m = u.m(), n = u.grid.n;
        const double dt = u.t_grid[1] - u.t_grid[0], ds = u.grid.ds;
        double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
        std::vector<double> col(m);
        std::vector<std::vector<double>> ut(m, std::vector<double>(n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) col[j] = u.values[j][i];
            const auto d1 = derivative1(col, dt);
            const auto d2 = m >= 4 ? derivative2(col, dt) : std::vector<double>(m, 0.0);
            for (int j = 0; j < m; ++j) {
                ut[j][i] = d1[j];
                a = std::max(a, std::abs(d1[j]));
                b = std::max(b, std::abs(d2[j]));
            }
        }
        for (int j = 0; j < m; ++j) {
            const auto ss = derivative2(u.values[j], ds);
            const auto ts = derivative1(ut[j], ds);
            for (int i = 0; i < n; ++i) {
                c = std::max(c, std::abs(ss[i]));
                d = std::max(d, std::abs(ts[i]));
            }
        }
        rep.eps.push_back(it->first);
        rep.sup_ut.push_back(a);
        rep.sup_utt.push_back(b);
        rep.sup_uss.push_back(c);
        rep.sup_uts.push_back(d);
    }
    auto check = [&](const std::vector<double>& v, const char* name, double& spread) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        spread = *hi / *lo - 1.0;
        for (std::size_t k = 1; k < v.size(); ++k) {
            if (v[k] > 1.1 * v[k - 1]) {
                std::ostringstream os;
                os << name << " grows from " << v[k - 1] << " to " << v[k] << " between ε = "
                   << rep.eps[k - 1] << " and " << rep.eps[k];
                rep.violations.push_back(os.str());
                rep.uniform = false;
            }
        }
    };
    check(rep.sup_ut, "sup|u_t|", rep.spread_ut);
    check(rep.sup_utt, "sup|u_tt|", rep.spread_utt);
    check(rep.sup_uss, "sup|u_ss|", rep.spread_uss);
    check(rep.sup_uts, "sup|u_ts|", rep.spread_uts);
    return rep;
}

}  // namespace kelab
