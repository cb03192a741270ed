#pragma once

#include <map>
#include <string>
#include <vector>

#include "kelab/geometry.hpp"

namespace kelab {

struct PathOfPotentials {
    std::vector<double> t_grid;
    std::vector<ReducedPotential> fibers;
    ReducedPotential reference;

    void validate() const;
};

struct DingRow {
    double t = 0.0;
    double E = 0.0;
    double F = 0.0;
    double D = 0.0;
    double Dprime = 0.0;     // analytic integrand
    double Dprime_fd = 0.0;  // differentiated D values
    double Dsecond = 0.0;
    double c_t = 0.0;          // 2*pi*int w ds
    double int_f_omega = 0.0;  // 2*pi*int f u'' ds
    double int_f_exp = 0.0;    // 2*pi*int f w ds
    double int_delta_exp = 0.0;
};

struct DingReport {
    std::vector<DingRow> rows;

    double maxDprimeMismatch() const;
    double minDsecond() const;
    std::string toCsv() const;
    static DingReport fromCsv(const std::string& text);
};

// Aubin-Mabuchi energy relative to u0, normalized by the total volume so that
// E(u0 + k) = k.
double energyE(const ReducedPotential& u, const ReducedPotential& u0);
double fFunctional(const ReducedPotential& u);
double dingFunctional(const ReducedPotential& u, const ReducedPotential& u0);

DingReport dingDerivatives(const PathOfPotentials& path, const std::vector<FiberGeometry>& geoms);
std::vector<FiberGeometry> pathGeometries(const PathOfPotentials& path);

struct IntegratedDefect {
    double f_term = 0.0;      // int_0^1 int f e^{-phi}/c_t dt
    double delta_term = 0.0;  // int_0^1 int delta_t e^{-phi}/c_t dt
    double sum() const { return f_term + delta_term; }
};
IntegratedDefect integratedDefect(const DingReport& report);
// Per-t integrand (int f e^{-phi} + int delta e^{-phi}) / c_t.
std::vector<double> defectDensity(const DingReport& report);

struct FatouSelection {
    std::vector<double> t;
    std::vector<std::vector<double>> selected;  // per t: ascending-order ε values kept
    std::vector<double> C_t;                    // per t: max G/ε over kept values
    std::vector<bool> flagged;                  // no subsequence reaching the smallest ε
    double A = 0.0;                             // max_ε int G dt / ε
    double cutoff = 0.0;
    double selectedFraction() const;
};
// values: ε -> G_ε sampled on t (uniform on [0,1]).
FatouSelection fatouSubsequence(const std::map<double, std::vector<double>>& values,
                                const std::vector<double>& t, double markovFraction = 0.1);

}  // namespace kelab
