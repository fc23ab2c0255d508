#include "pilotkey/trajectories.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pilotkey/errors.hpp"

namespace pilotkey {

InitialPositions sample_initial(double sigma0, Rng& rng) {
    if (!(sigma0 > 0.0)) throw std::invalid_argument("sigma0 must be positive");
    std::normal_distribution<double> normal(0.0, sigma0);
    InitialPositions x;
    x.z10 = normal(rng);
    x.z20 = normal(rng);
    return x;
}

InitialPositions sample_initial(double sigma0, std::uint64_t seed) {
    Rng rng(seed);
    return sample_initial(sigma0, rng);
}

bool passes_slits(const InitialPositions& x, const PhysParams& p) {
    return std::abs(x.z10) < 0.5 * p.d && std::abs(x.z20) < 0.5 * p.d;
}

bool rejected_by_filter(const InitialPositions& x, const PhysParams& p) {
    return std::abs(x.z20) < p.d / (2.0 * p.K);
}

InitialPositions sample_admissible(const PhysParams& p, Rng& rng) {
    p.validate();
    for (;;) {
        const auto x = sample_initial(p.sigma0, rng);
        if (passes_slits(x, p) && !rejected_by_filter(x, p)) return x;
    }
}

double default_t_end(const PhysParams& p) {
    // eps(t) = 1 + hbar^2 t^2 / (4 sigma0^4 m^2) = 1/kGuidanceDecay
    const double s2 = p.sigma0 * p.sigma0;
    return 2.0 * s2 * p.mass / p.hbar * std::sqrt(1.0 / kGuidanceDecay - 1.0);
}

TrajectoryPair integrate(const InitialPositions& initial, const RoundSettings& settings, const PhysParams& p,
                         double t_end, double dt, std::size_t max_samples) {
    p.validate_kinematics();
    if (!(t_end > 0.0) || !(dt > 0.0) || dt > t_end || !std::isfinite(t_end)) {
        throw std::invalid_argument("integrate requires 0 < dt <= t_end");
    }
    if (max_samples < 2) throw std::invalid_argument("max_samples must be at least 2");
    if (!std::isfinite(initial.z10) || !std::isfinite(initial.z20)) {
        throw std::invalid_argument("initial positions must be finite");
    }

    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    const double h = t_end / static_cast<double>(n_steps);
    const Sign s = settings.s;

    TrajectoryPair out;
    out.settings = settings;
    out.initial = initial;
    out.params = p;
    const std::size_t n_keep = std::min(n_steps + 1, max_samples);
    out.times.reserve(n_keep);
    out.z1.reserve(n_keep);
    out.z2.reserve(n_keep);

    // Step indices to keep: all of them, or an even spread of n_keep of them.
    std::size_t next_keep = 0;
    std::size_t kept = 0;
    auto advance_keep = [&] {
        ++kept;
        next_keep = (n_keep == n_steps + 1) ? kept : (kept * n_steps) / (n_keep - 1);
    };

    double z1 = initial.z10;
    double z2 = initial.z20;
    for (std::size_t i = 0;; ++i) {
        const double t = static_cast<double>(i) * h;
        if (i == next_keep) {
            out.times.push_back(t);
            out.z1.push_back(z1);
            out.z2.push_back(z2);
            advance_keep();
        }
        if (i == n_steps) break;

        const auto k1 = velocities(z1, z2, t, p, s);
        const auto k2 = velocities(z1 + 0.5 * h * k1.v1, z2 + 0.5 * h * k1.v2, t + 0.5 * h, p, s);
        const auto k3 = velocities(z1 + 0.5 * h * k2.v1, z2 + 0.5 * h * k2.v2, t + 0.5 * h, p, s);
        const auto k4 = velocities(z1 + h * k3.v1, z2 + h * k3.v2, t + h, p, s);
        z1 += h / 6.0 * (k1.v1 + 2.0 * k2.v1 + 2.0 * k3.v1 + k4.v1);
        z2 += h / 6.0 * (k1.v2 + 2.0 * k2.v2 + 2.0 * k3.v2 + k4.v2);
        if (!std::isfinite(z1) || !std::isfinite(z2)) {
            throw IntegrationError(i + 1, "non-finite trajectory state");
        }
    }
    return out;
}

Outcome outcome_measured(const TrajectoryPair& traj) {
    if (traj.z1.empty() || traj.z2.empty()) throw std::invalid_argument("empty trajectory");
    const double dead = kDeadZoneFraction * traj.params.sigma0;
    const double z1 = traj.z1.back();
    const double z2 = traj.z2.back();
    if (std::abs(z1) < dead || std::abs(z2) < dead) {
        throw AmbiguousOutcome("final position inside the dead zone; extend t_end or filter the sample");
    }
    return {sign_of(z1), sign_of(z2)};
}

Outcome outcome_predicted(const InitialPositions& initial, Sign s) {
    if (initial.z20 == 0.0 || std::isnan(initial.z20)) throw DegenerateInput("z20 = 0 has no predicted outcome");
    const Sign wb = sign_of(initial.z20);
    return {-(wb * s), wb};
}

Outcome outcome_asymptotic(const InitialPositions& initial, Sign s, const PhysParams& p) {
    const double xi = initial.z10 - to_double(s) * p.K * initial.z20;
    if (xi == 0.0 || std::isnan(xi)) throw DegenerateInput("initial position on the branch boundary z1 = sK z2");
    const Sign wa = sign_of(xi);
    return {wa, -(s * wa)};
}

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const TrajectoryPair& traj,
                          const std::map<std::string, std::string>& header) {
    for (const auto& [key, value] : header) out << "# " << key << '=' << value << '\n';
    out << "t,z1,z2\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        out << format_double(traj.times[i]) << ',' << format_double(traj.z1[i]) << ','
            << format_double(traj.z2[i]) << '\n';
    }
}

}  // namespace pilotkey
