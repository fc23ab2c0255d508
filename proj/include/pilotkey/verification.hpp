#pragma once

// Independent numerical oracles that check the closed forms of physics.hpp
// against one another, against the continuity equation, and against an
// ensemble of integrated trajectories.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pilotkey/physics.hpp"

namespace pilotkey {

struct GridSpec {
    double z_min = -6.0;
    double z_max = 6.0;
    int n_points = 101;
    std::vector<double> times;

    void validate() const;
    double node(int i) const;
};

/// Square grid [-L, L] with L = 6 sigma0 sqrt(eps(t_max)) plus the largest
/// packet displacement K B mu T t_max / m, so every branch is covered.
GridSpec default_grid(const PhysParams& p, std::vector<double> times, int n_points = 101);

struct CheckReport {
    std::string check_name;
    double max_abs_error = 0.0;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::size_t points = 0;
    /// Residual ratio R(h)/R(h/2) for checks that test a convergence order.
    std::optional<double> convergence_ratio;
};

constexpr double kClosedFormTolerance = 1e-10;
constexpr double kRichardsonLow = 3.5;
constexpr double kRichardsonHigh = 4.5;
constexpr double kContinuityTolerance = 1e-6;
constexpr double kEquivarianceTolerance = 0.05;

/// |c+-|^2 + |c-+|^2 against density at every node and time where rho > 1e-300.
CheckReport check_density_oracle(const GridSpec& grid, const PhysParams& p, Sign s,
                                 double tolerance = kClosedFormTolerance);

/// Central-difference residual of d(rho)/dt + dj1/dz1 + dj2/dz2 at interior
/// nodes for steps h and h/2. max_abs_error is the raw step-h residual. The
/// check passes when max R(h) / max R(h/2) lies in [3.5, 4.5] and the
/// Richardson-extrapolated residual (4 R(h/2) - R(h)) / 3, relative to the
/// largest of the three cancelling terms, is within tolerance.
CheckReport check_continuity(const GridSpec& grid, const PhysParams& p, Sign s, double h,
                             double tolerance = kContinuityTolerance);

/// j_a against rho * v_a where rho exceeds 1e-12 of the slice peak. The error
/// is relative to rho (|spreading| + |guidance|), the size of the two terms
/// that make up v_a, so cancellation near v_a = 0 does not inflate it.
CheckReport check_current_consistency(const GridSpec& grid, const PhysParams& p, Sign s,
                                      double tolerance = kClosedFormTolerance);

struct EquivarianceOptions {
    std::uint64_t seed = 1;
    double dt = 1e-3;
    int bins = 50;
    double tolerance = kEquivarianceTolerance;
};

/// Total-variation distance between the histogram of n trajectories, started
/// from rho(., ., 0) and transported to t_probe, and the bin masses of
/// rho(., ., t_probe). Mass falling outside the histogram box counts as one
/// extra bin.
CheckReport check_equivariance(std::size_t n_samples, double t_probe, const PhysParams& p,
                               const RoundSettings& settings, const EquivarianceOptions& options = {});

/// Histogram box half-widths (z1, z2) used by check_equivariance.
struct HistogramBox {
    double half1;
    double half2;
};

HistogramBox equivariance_box(double t_probe, const PhysParams& p);

/// Mass of rho(., ., t) on the box [a1, b1] x [a2, b2] by tensor Gauss-Legendre.
double density_mass(double a1, double b1, double a2, double b2, double t, const PhysParams& p, Sign s);

}  // namespace pilotkey
