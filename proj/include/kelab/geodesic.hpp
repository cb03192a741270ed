#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "kelab/functionals.hpp"
#include "kelab/geometry.hpp"

namespace kelab {

// ---- Kähler-Einstein ODE  u'' = 2 e^{s-u} / int e^{s-u} ds ----

struct KeSolveOptions {
    int max_iter = 30;
    const ReducedPotential* initial = nullptr;  // defaults to a rough guess
};

struct KeSolveInfo {
    int iterations = 0;
    double residual = 0.0;  // sup norm of the solver's discrete residual
    std::vector<double> history;
};

// Fourth-order (Numerov) discretization of the ODE with the normalization
// u(0) = 2 log 2, u'(0) = 1 removing the constant and translation freedom.
ReducedPotential solveKE(const SGrid& grid, double tol, const KeSolveOptions& opt = {},
                         KeSolveInfo* info = nullptr);
// Sup norm of the Numerov residual at interior nodes.
double keResidualNumerov(const ReducedPotential& u);
// Sup norm of the plain second-order residual u'' - 2 w / int w at interior nodes.
double keResidual(const ReducedPotential& u);
// int e^{s-u} ds including exponential tails beyond the grid.
double keNormalizer(const ReducedPotential& u);

// ---- Exact weak geodesic: linear interpolation of Legendre duals ----

class LegendreGeodesic {
public:
    LegendreGeodesic(const ReducedPotential& u0, const ReducedPotential& u1);
    ~LegendreGeodesic();
    LegendreGeodesic(LegendreGeodesic&&) noexcept;

    ReducedPotential at(double t) const;
    // d/dt u_t at the grid nodes: -(u1* - u0*)(u_t'(s)).
    std::vector<double> timeDerivative(double t) const;
    // Duals sampled at the internal moment grid.
    const std::vector<double>& momentGrid() const;
    const std::vector<double>& dual0() const;
    const std::vector<double>& dual1() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ReducedPotential legendreGeodesic(const ReducedPotential& u0, const ReducedPotential& u1, double t);
// Legendre dual u*(x) = sup_s (x s - u(s)) at the given moment values.
std::vector<double> legendreDual(const ReducedPotential& u, const std::vector<double>& x);

// ---- ε-geodesics  u_tt u_ss - u_ts^2 = ε h'' ----

struct SpacetimePotential {
    std::vector<double> t_grid;
    SGrid grid;
    std::vector<std::vector<double>> values;  // [t index][s index]
    double epsilon = 0.0;
    ReducedPotential background;

    int m() const { return static_cast<int>(t_grid.size()); }
    ReducedPotential slice(int j) const;
    PathOfPotentials asPath() const;
    // Max over interior nodes of |u_tt u_ss - u_ts^2 - ε h''|.
    double maResidual() const;
    // Min over interior nodes of u_tt u_ss - u_ts^2.
    double minSpacetimeDet() const;

    std::string serialize() const;
    static SpacetimePotential deserialize(const std::string& text);
};

std::vector<double> uniformTimeGrid(int m);
SpacetimePotential legendrePath(const ReducedPotential& u0, const ReducedPotential& u1,
                                const std::vector<double>& t_grid);

struct EpsGeodesicOptions {
    int max_iter = 60;
    double min_damping = 1.0 / 4096.0;
    const SpacetimePotential* initial = nullptr;  // defaults to the Legendre path
};

struct EpsGeodesicInfo {
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;
    std::vector<double> damping;
};

SpacetimePotential solveEpsilonGeodesic(const ReducedPotential& u0, const ReducedPotential& u1,
                                        double eps, const std::vector<double>& t_grid,
                                        const SGrid& s_grid, double tol,
                                        const EpsGeodesicOptions& opt = {},
                                        EpsGeodesicInfo* info = nullptr);

// f = u_tt - u_ts^2/u_ss on interior nodes, 0 elsewhere.
std::vector<std::vector<double>> geodesicDefect(const SpacetimePotential& u);

struct ChenBoundsReport {
    std::vector<double> eps;  // descending
    std::vector<double> sup_ut, sup_utt, sup_uss, sup_uts;
    bool uniform = true;  // no bound grows by more than 10% as ε decreases
    std::vector<std::string> violations;
    // max/min - 1 across the schedule, per bound
    double spread_ut = 0.0, spread_utt = 0.0, spread_uss = 0.0, spread_uts = 0.0;
};

ChenBoundsReport verifyChenBounds(const std::map<double, SpacetimePotential>& solutions);

}  // namespace kelab
