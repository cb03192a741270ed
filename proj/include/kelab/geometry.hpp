#pragma once

#include <memory>
#include <vector>

namespace kelab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
// Total volume of the anticanonical class in these units: 2*pi*(2 - 0).
inline constexpr double kVolume = 4.0 * kPi;

// Uniform grid in the log-radial coordinate s = log|z|^2.
struct SGrid {
    double s_min = -15.0;
    double s_max = 15.0;
    int n = 513;
    double ds = 30.0 / 512.0;

    static SGrid make(double s_min, double s_max, int n);
    double s(int i) const { return s_min + i * ds; }
    std::vector<double> nodes() const;
    bool sameAs(const SGrid& o) const;
};

inline constexpr int kMinGridPoints = 33;

// Samples of an S^1-invariant potential u(s) on -K of the sphere.
struct ReducedPotential {
    SGrid grid;
    std::vector<double> values;
    double slope_left = 0.0;
    double slope_right = 2.0;

    // Validates every invariant, throwing ValidationError naming the first
    // offending index.
    static ReducedPotential fromSamples(const SGrid& g, std::vector<double> v);
    void validate() const;
};

struct FiberGeometry {
    SGrid grid;
    std::vector<double> u_p;     // u'
    std::vector<double> u_pp;    // u''
    std::vector<double> F;       // Ricci potential s - u - log u''
    std::vector<double> w;       // e^{s-u}
    std::vector<double> p_half;  // (w/u'') averaged to half points, n-1 entries
    std::vector<double> w_half;  // w averaged to half points, n-1 entries
    std::vector<double> quad;    // trapezoid weights
    double mass = 0.0;           // 2*pi*int w ds

    double measureIdentityResidual() const;
};

// Smooth evaluation of a sampled potential anywhere on the line: cubic
// B-spline inside the grid, exponential tails a + b e^s (left) and
// 2s + a + b e^{-s} (right) outside, matched at the end nodes.
class PotentialInterpolant {
public:
    explicit PotentialInterpolant(const ReducedPotential& u);
    ~PotentialInterpolant();
    PotentialInterpolant(PotentialInterpolant&&) noexcept;
    PotentialInterpolant& operator=(PotentialInterpolant&&) noexcept;

    double value(double s) const;
    double deriv(double s) const;
    double deriv2(double s) const;
    // Solves u'(s) = x for x in (0, 2).
    double inverseDeriv(double x) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ReducedPotential fubiniStudyPotential(const SGrid& g);
ReducedPotential pullbackPotential(const ReducedPotential& u, double tau);
FiberGeometry fiberGeometry(const ReducedPotential& u);

// Second-order first and second derivatives (central inside, one-sided
// second-order at the ends).
std::vector<double> derivative1(const std::vector<double>& f, double ds);
std::vector<double> derivative2(const std::vector<double>& f, double ds);
std::vector<double> trapezoidWeights(const SGrid& g);

// int u'' ds over the whole line: trapezoid on the grid plus the
// exponential tails. Should equal slope_right - slope_left.
double kahlerVolume(const ReducedPotential& u);

}  // namespace kelab
