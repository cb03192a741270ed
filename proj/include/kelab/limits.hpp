#pragma once

#include <map>
#include <string>
#include <vector>

#include "kelab/geodesic.hpp"
#include "kelab/spectral.hpp"

namespace kelab {

// One (t, ε) record: spectrum of the fiber and the expansion of pi_perp phi'.
struct EpsilonTraceEntry {
    double eps = 0.0;
    double t = 0.0;
    SpectralPack pack;
    std::vector<double> a;      // <pi_perp phi', e_i>
    double defect = 0.0;        // sum (lambda_i - 1) a_i^2
    double mass = 0.0;          // sum a_i^2
    double total = 0.0;         // |pi_perp phi'|^2
    double dbar_total = 0.0;    // dbarNormSq(pi_perp phi')
    HolomorphyDefect holo;      // of the untruncated field pi_perp phi'
    FiberFunction phi_perp;     // pi_perp phi' (may be empty for synthetic input)
    FiberGeometry geo;          // fiber geometry (may be empty for synthetic input)

    // dbar - norm: the value the defect must match up to truncation.
    double defectIdentity() const { return dbar_total - total; }
};

// Entries at one t for several ε, sorted by decreasing ε.
using EpsilonTrace = std::vector<EpsilonTraceEntry>;

EpsilonTraceEntry fiberDecompose(const SpacetimePotential& solution, double t, int k);

struct Prop12Report {
    std::vector<double> eps;
    std::vector<bool> cond1, cond2, cond3;
    std::vector<double> mass_fraction;  // sum_{i<=k} a_i^2 / |pi_perp phi'|^2
    std::vector<double> lambda_N;
    std::vector<double> defect_over_eps;
    double fitted_C = 0.0;    // max defect/ε
    bool trivial = false;     // pi_perp phi' vanishes: no field to extract
    bool allHold() const;
};

Prop12Report verifyProp12Conditions(const EpsilonTrace& trace, double A, double K, double C,
                                    double trivialFloor = 1e-10);

// λ_i(ε) - 1 <= max(10 ε^0.9, 1e-3) along the whole schedule.
bool convergesToOne(const std::vector<double>& eps, const std::vector<double>& lambda);

enum class ClusterCase { Trivial, Case1, Case2Sub1, Case2Sub2 };
const char* clusterCaseName(ClusterCase c);

struct ClusterReport {
    ClusterCase kind = ClusterCase::Trivial;
    int k = 0;                              // leading eigenvalues tending to 1
    std::vector<bool> converging;           // per eigen index
    std::vector<double> lambda_slope;       // d lambda_i / d ε, least squares
    std::vector<std::vector<double>> gaps;  // per ε: lambda_{i+1} - lambda_i
    std::vector<double> partial_sums;       // per ε: sum_{i<=K} a_i^2
    int truncation = 0;                     // K: u_ε truncated to i <= K
    std::vector<int> blocks;                // K_1 < K_2 < ... (1-based, exclusive)
    int multiplicity = 0;                   // λ=1 multiplicity at the smallest ε
    int cluster_count = 0;
    bool finiteness_ok = true;              // cluster_count <= multiplicity
    bool impossible = false;                // subCase 1 detected
    std::vector<std::string> diagnostics;
};

ClusterReport clusterAnalysis(const EpsilonTrace& trace, double blockFraction = 0.25);

struct ExtractedField {
    double t = 0.0;
    FiberFunction u_inf;
    FiberFunction h_inf;
    double c = 0.0;
    double holoResidual = 0.0;
    double eigenResidual = 0.0;  // |Box u - u| / |u| on the limit fiber
    double norm_fraction = 0.0;  // |u_inf| / |pi_perp phi'| at the smallest ε
    FiberGeometry geo;           // limit fiber
};

// limitGeo: the ε -> 0 fiber (Legendre geodesic slice at the same t).
ExtractedField extractVectorField(const EpsilonTrace& trace, const ClusterReport& cluster,
                                  const FiberGeometry& limitGeo);

struct GramReport {
    std::vector<std::vector<double>> gram;
    double max_offdiag = 0.0;  // normalized by the diagonal
    bool flagged = false;      // max_offdiag >= 1e-3
};
GramReport orthogonalityCheck(const std::vector<ExtractedField>& fields);

struct TimeConstancyReport {
    std::vector<double> t, c;
    double c_mean = 0.0, c_std = 0.0, c_maxdev = 0.0;
    // max |u_ss dh/dt|, relative to max |u_ts|
    double field_drift = 0.0;
    // max |d/dt(u_ss h) - d/ds(u_tt)|, relative to max |u_ts|
    double transport_residual = 0.0;
};
// path: the limit geodesic sampled on the same t-grid the fields were taken from.
TimeConstancyReport timeConstancy(const std::map<double, ExtractedField>& fields,
                                  const SpacetimePotential* path = nullptr);

// max over interior nodes of |(u_ts^2/u_ss)_s - h u_tss| with h = u_ts/u_ss,
// relative to max |u_ts|^2.
double vectorFieldIdentityResidual(const SpacetimePotential& path);

// Integrated comparison of u_ss h between each ε-fiber and the limit fiber
// against a family of bump test functions.
std::vector<double> weakProductDiagnostic(const EpsilonTrace& trace, const FiberGeometry& limitGeo,
                                          const FiberFunction& limitH);

struct AutomorphismReport {
    double c = 0.0;
    double a = 1.0;               // z -> a z, a = e^{c/2}
    double endpoint_error = 0.0;  // oscillation of pullback(u1, -c) - u0
    bool matches = false;
};
AutomorphismReport reconstructAutomorphism(const ExtractedField& field, const ReducedPotential& u0,
                                           const ReducedPotential& u1, double tol = 1e-2);
AutomorphismReport reconstructAutomorphism(double c, const ReducedPotential& u0,
                                           const ReducedPotential& u1, double tol = 1e-2);

// Least-squares slope of log y against log x.
double logLogSlope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kelab
