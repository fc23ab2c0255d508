#include "pilotkey/verification.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <stdexcept>

#include "pilotkey/rng.hpp"
#include "pilotkey/trajectories.hpp"

namespace pilotkey {

namespace {

constexpr double kDensityFloor = 1e-300;
constexpr double kPeakFraction = 1e-12;

const char* sign_tag(Sign s) { return s == Sign::plus ? "+" : "-"; }

double continuity_residual(double z1, double z2, double t, double h, const PhysParams& p, Sign s,
                           double* term_scale) {
    const double drho = (density(z1, z2, t + h, p, s) - density(z1, z2, t - h, p, s)) / (2.0 * h);
    const double dj1 = (current1(z1 + h, z2, t, p, s) - current1(z1 - h, z2, t, p, s)) / (2.0 * h);
    const double dj2 = (current2(z1, z2 + h, t, p, s) - current2(z1, z2 - h, t, p, s)) / (2.0 * h);
    if (term_scale) *term_scale = std::max({std::abs(drho), std::abs(dj1), std::abs(dj2)});
    return drho + dj1 + dj2;
}

}  // namespace

void GridSpec::validate() const {
    if (!(z_min < z_max)) throw std::invalid_argument("GridSpec requires z_min < z_max");
    if (n_points < 3) throw std::invalid_argument("GridSpec requires n_points >= 3");
    if (times.empty()) throw std::invalid_argument("GridSpec requires at least one probe time");
    for (double t : times) {
        if (!(t >= 0.0)) throw std::invalid_argument("GridSpec probe times must be non-negative");
    }
}

double GridSpec::node(int i) const {
    return z_min + (z_max - z_min) * static_cast<double>(i) / static_cast<double>(n_points - 1);
}

GridSpec default_grid(const PhysParams& p, std::vector<double> times, int n_points) {
    const double t_max = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
    const auto geo = packet_geometry(t_max, p);
    const double half = 6.0 * geo.width + std::max(geo.center1, geo.center2);
    GridSpec g;
    g.z_min = -half;
    g.z_max = half;
    g.n_points = n_points;
    g.times = std::move(times);
    return g;
}

CheckReport check_density_oracle(const GridSpec& grid, const PhysParams& p, Sign s, double tolerance) {
    grid.validate();
    CheckReport r;
    r.check_name = std::string("density_oracle[s=") + sign_tag(s) + "]";
    r.tolerance = tolerance;
    for (double t : grid.times) {
        for (int i = 0; i < grid.n_points; ++i) {
            for (int k = 0; k < grid.n_points; ++k) {
                const double z1 = grid.node(i);
                const double z2 = grid.node(k);
                const double rho = density(z1, z2, t, p, s);
                if (!(rho > kDensityFloor)) continue;
                const double psi2 = wavefunction(z1, z2, t, p, s).norm2();
                const double err = std::abs(psi2 - rho);
                r.max_abs_error = std::max(r.max_abs_error, err);
                r.max_rel_error = std::max(r.max_rel_error, err / rho);
                ++r.points;
            }
        }
    }
    r.pass = r.points > 0 && r.max_rel_error <= tolerance;
    return r;
}

CheckReport check_current_consistency(const GridSpec& grid, const PhysParams& p, Sign s, double tolerance) {
    grid.validate();
    CheckReport r;
    r.check_name = std::string("current_consistency[s=") + sign_tag(s) + "]";
    r.tolerance = tolerance;
    for (double t : grid.times) {
        double peak = 0.0;
        for (int i = 0; i < grid.n_points; ++i) {
            for (int k = 0; k < grid.n_points; ++k) peak = std::max(peak, density(grid.node(i), grid.node(k), t, p, s));
        }
        for (int i = 0; i < grid.n_points; ++i) {
            for (int k = 0; k < grid.n_points; ++k) {
                const double z1 = grid.node(i);
                const double z2 = grid.node(k);
                const double rho = density(z1, z2, t, p, s);
                if (!(rho > kPeakFraction * peak)) continue;
                const double spread1 = spreading_velocity(z1, t, p);
                const double spread2 = spreading_velocity(z2, t, p);
                const double guide1 = reduced_velocity1(z1, z2, t, p, s);
                const double guide2 = reduced_velocity2(z1, z2, t, p, s);
                const double e1 = std::abs(current1(z1, z2, t, p, s) - rho * (spread1 + guide1));
                const double e2 = std::abs(current2(z1, z2, t, p, s) - rho * (spread2 + guide2));
                const double scale1 = rho * (std::abs(spread1) + std::abs(guide1));
                const double scale2 = rho * (std::abs(spread2) + std::abs(guide2));
                r.max_abs_error = std::max({r.max_abs_error, e1, e2});
                if (scale1 > 0.0) r.max_rel_error = std::max(r.max_rel_error, e1 / scale1);
                if (scale2 > 0.0) r.max_rel_error = std::max(r.max_rel_error, e2 / scale2);
                ++r.points;
            }
        }
    }
    r.pass = r.points > 0 && r.max_rel_error <= tolerance;
    return r;
}

CheckReport check_continuity(const GridSpec& grid, const PhysParams& p, Sign s, double h, double tolerance) {
    grid.validate();
    if (!(h > 0.0)) throw std::invalid_argument("continuity step must be positive");
    CheckReport r;
    r.check_name = std::string("continuity[s=") + sign_tag(s) + "]";
    r.tolerance = tolerance;
    double max_h = 0.0;
    double max_half = 0.0;
    double max_extrapolated = 0.0;
    double scale = 0.0;
    for (double t : grid.times) {
        if (t < h) continue;
        for (int i = 1; i + 1 < grid.n_points; ++i) {
            for (int k = 1; k + 1 < grid.n_points; ++k) {
                const double z1 = grid.node(i);
                const double z2 = grid.node(k);
                double term = 0.0;
                const double r_h = continuity_residual(z1, z2, t, h, p, s, &term);
                const double r_half = continuity_residual(z1, z2, t, 0.5 * h, p, s, nullptr);
                max_h = std::max(max_h, std::abs(r_h));
                max_half = std::max(max_half, std::abs(r_half));
                // Richardson: removes the h^2 truncation term, leaving O(h^4) plus rounding.
                max_extrapolated = std::max(max_extrapolated, std::abs(4.0 * r_half - r_h) / 3.0);
                scale = std::max(scale, term);
                ++r.points;
            }
        }
    }
    r.max_abs_error = max_h;
    r.max_rel_error = scale > 0.0 ? max_extrapolated / scale : 0.0;
    r.convergence_ratio = max_half > 0.0 ? max_h / max_half : 0.0;
    r.pass = r.points > 0 && *r.convergence_ratio >= kRichardsonLow && *r.convergence_ratio <= kRichardsonHigh &&
             r.max_rel_error <= tolerance;
    return r;
}

HistogramBox equivariance_box(double t_probe, const PhysParams& p) {
    const auto geo = packet_geometry(t_probe, p);
    return {6.0 * geo.width + geo.center1, 6.0 * geo.width + geo.center2};
}

double density_mass(double a1, double b1, double a2, double b2, double t, const PhysParams& p, Sign s) {
    using boost::math::quadrature::gauss;
    using Rule = gauss<double, 10>;
    return Rule::integrate(
        [&](double z1) { return Rule::integrate([&](double z2) { return density(z1, z2, t, p, s); }, a2, b2); }, a1,
        b1);
}

CheckReport check_equivariance(std::size_t n_samples, double t_probe, const PhysParams& p,
                               const RoundSettings& settings, const EquivarianceOptions& options) {
    if (n_samples == 0) throw std::invalid_argument("check_equivariance needs samples");
    if (!(t_probe >= 0.0)) throw std::invalid_argument("t_probe must be non-negative");
    if (options.bins < 1) throw std::invalid_argument("bins must be positive");
    p.validate_kinematics();

    const int nb = options.bins;
    const auto box = equivariance_box(t_probe, p);
    const double w1 = 2.0 * box.half1 / nb;
    const double w2 = 2.0 * box.half2 / nb;

    std::vector<double> counts(static_cast<std::size_t>(nb) * nb, 0.0);
    double outside = 0.0;
    for (std::size_t n = 0; n < n_samples; ++n) {
        auto rng = make_stream(options.seed, n, Stream::source);
        const auto x0 = sample_initial(p.sigma0, rng);
        double z1 = x0.z10;
        double z2 = x0.z20;
        if (t_probe > 0.0) {
            const auto traj = integrate(x0, settings, p, t_probe, std::min(options.dt, t_probe), 2);
            z1 = traj.z1.back();
            z2 = traj.z2.back();
        }
        const auto i = static_cast<long>(std::floor((z1 + box.half1) / w1));
        const auto k = static_cast<long>(std::floor((z2 + box.half2) / w2));
        if (i < 0 || i >= nb || k < 0 || k >= nb) {
            outside += 1.0;
            continue;
        }
        counts[static_cast<std::size_t>(i) * nb + static_cast<std::size_t>(k)] += 1.0;
    }

    const double inv_n = 1.0 / static_cast<double>(n_samples);
    double tv = 0.0;
    double model_inside = 0.0;
    for (int i = 0; i < nb; ++i) {
        const double a1 = -box.half1 + i * w1;
        for (int k = 0; k < nb; ++k) {
            const double a2 = -box.half2 + k * w2;
            const double mass = density_mass(a1, a1 + w1, a2, a2 + w2, t_probe, p, settings.s);
            model_inside += mass;
            tv += std::abs(counts[static_cast<std::size_t>(i) * nb + k] * inv_n - mass);
        }
    }
    tv += std::abs(outside * inv_n - std::max(0.0, 1.0 - model_inside));
    tv *= 0.5;

    CheckReport r;
    r.check_name = std::string("equivariance[s=") + sign_tag(settings.s) + "]";
    r.max_abs_error = tv;
    r.max_rel_error = tv;
    r.tolerance = options.tolerance;
    r.points = n_samples;
    r.pass = tv <= options.tolerance;
    return r;
}

}  // namespace pilotkey
