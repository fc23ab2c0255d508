#pragma once

// Quantum-equilibrium sampling of entrance positions and fixed-step RK4
// integration of the coupled guidance equations dz1/dt = v1(z1, z2, t),
// dz2/dt = v2(z1, z2, t).

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "pilotkey/physics.hpp"
#include "pilotkey/rng.hpp"

namespace pilotkey {

struct InitialPositions {
    double z10 = 0.0;
    double z20 = 0.0;
};

struct Outcome {
    Sign W_A;
    Sign W_B;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct TrajectoryPair {
    std::vector<double> times;
    std::vector<double> z1;
    std::vector<double> z2;
    RoundSettings settings;
    InitialPositions initial;
    PhysParams params;
};

constexpr double kDefaultDt = 1e-3;
constexpr std::size_t kMaxStoredSamples = 4096;
/// Dead-zone half width for reading the final side, in units of sigma0.
constexpr double kDeadZoneFraction = 1e-6;
/// Residual size of the guidance term, relative to B mu T / m, at the default t_end.
constexpr double kGuidanceDecay = 1e-3;

/// Draws z10, z20 i.i.d. Normal(0, sigma0^2), the t = 0 density.
InitialPositions sample_initial(double sigma0, Rng& rng);
InitialPositions sample_initial(double sigma0, std::uint64_t seed);

/// Both particles lie inside their entrance slits, |z_a0| < d/2.
bool passes_slits(const InitialPositions& x, const PhysParams& p);

/// Bob's near-centre rejection |z20| < d/(2K).
bool rejected_by_filter(const InitialPositions& x, const PhysParams& p);

/// Rejection-samples a pair that passes both slits and Bob's filter.
InitialPositions sample_admissible(const PhysParams& p, Rng& rng);

/// Time after which the tanh term is below kGuidanceDecay of B mu T/m, i.e.
/// eps(t) = 1/kGuidanceDecay. Beyond it z_a/sqrt(eps) only drifts away from 0.
double default_t_end(const PhysParams& p);

/// Classic RK4 with a uniform step t_end/n, n = ceil(t_end/dt). The output is
/// decimated to at most max_samples points including both end points.
/// Throws IntegrationError on a non-finite state, std::invalid_argument on bad input.
TrajectoryPair integrate(const InitialPositions& initial, const RoundSettings& settings, const PhysParams& p,
                         double t_end, double dt = kDefaultDt, std::size_t max_samples = kMaxStoredSamples);

/// Sides of the z = 0 plane at the end of the trajectory. Throws
/// AmbiguousOutcome when a final |z| is inside the dead zone.
Outcome outcome_measured(const TrajectoryPair& traj);

/// Step-4 sign law: W_A = -sgn(z20) s, W_B = sgn(z20). Throws DegenerateInput for z20 = 0.
Outcome outcome_predicted(const InitialPositions& initial, Sign s);

/// Branch selected by the guidance flow. The sign of xi = z1 - sK z2 is
/// conserved along every trajectory, and once the drift of order B mu T/m
/// dominates the entrance offsets the particles end on the branch's sides:
/// W_A = sgn(z10 - sK z20), W_B = -s W_A. This agrees with outcome_predicted
/// whenever |z10| < K|z20|, which the slits and Bob's filter guarantee.
/// Throws DegenerateInput on the branch boundary xi = 0.
Outcome outcome_asymptotic(const InitialPositions& initial, Sign s, const PhysParams& p);

/// CSV with '#' comment lines echoing `header`, then "t,z1,z2" rows in
/// round-trip precision.
void write_trajectory_csv(std::ostream& out, const TrajectoryPair& traj,
                          const std::map<std::string, std::string>& header);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace pilotkey
