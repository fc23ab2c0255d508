#include "pilotkey/physics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace pilotkey {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kPi = std::numbers::pi;

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument(std::string("PhysParams.") + name + " must be positive and finite");
    }
}

// Exponent shared by rho, j1 and j2 (everything except the cosh/sinh factor).
double envelope_exponent(double z1, double z2, double t, const PhysParams& p, double eps) {
    const double s2 = p.sigma0 * p.sigma0;
    const double a = p.kick();
    const double spread = (1.0 + p.K * p.K) * a * a * t * t / (2.0 * p.mass * p.mass * s2 * eps);
    return -std::log(2.0 * s2 * kPi * eps) - (z1 * z1 + z2 * z2) / (2.0 * s2 * eps) - spread;
}

// cosh(X) and sinh(X) scaled by exp(envelope), evaluated without overflow.
struct HyperbolicPair {
    double cosh_part;
    double sinh_part;
};

HyperbolicPair scaled_hyperbolics(double exponent, double x) {
    const double ax = std::abs(x);
    const double base = std::exp(exponent + ax - kLn2);
    const double tail = std::exp(-2.0 * ax);
    const double sinh_abs = -base * std::expm1(-2.0 * ax);
    return {base * (1.0 + tail), x < 0.0 ? -sinh_abs : sinh_abs};
}

double log_cosh(double x) {
    const double ax = std::abs(x);
    return ax + std::log1p(std::exp(-2.0 * ax)) - kLn2;
}

double guidance_coefficient(double t, const PhysParams& p) {
    return p.kick() / (p.mass * epsilon(t, p));
}

}  // namespace

Sign sign_of(double x) {
    if (x > 0.0) return Sign::plus;
    if (x < 0.0) return Sign::minus;
    throw std::domain_error("sign of zero or NaN is undefined");
}

double alignment_angle(Alignment a) {
    return a == Alignment::aligned ? 0.0 : kPi / 2.0;
}

void PhysParams::validate_kinematics() const {
    require_positive(hbar, "hbar");
    require_positive(mass, "mass");
    require_positive(sigma0, "sigma0");
    require_positive(T, "T");
    require_positive(d, "d");
    if (!std::isfinite(B) || !std::isfinite(B0) || !std::isfinite(mu) || !std::isfinite(K)) {
        throw std::invalid_argument("PhysParams fields must be finite");
    }
}

void PhysParams::validate() const {
    validate_kinematics();
    require_positive(B, "B");
    require_positive(mu, "mu");
    if (!(K > 1.0)) throw std::invalid_argument("PhysParams.K must exceed 1");
}

PhysParams strong_field_params() {
    PhysParams p;
    p.B = 10.0;
    p.mu = 1.0;
    p.T = 1.0;
    p.K = 2.0;
    p.d = 1.0;
    return p;
}

double epsilon(double t, const PhysParams& p) {
    const double s2 = p.sigma0 * p.sigma0;
    return 1.0 + p.hbar * p.hbar * t * t / (4.0 * s2 * s2 * p.mass * p.mass);
}

double branch_argument(double z1, double z2, double t, const PhysParams& p, Sign s) {
    const double xi = z1 - to_double(s) * p.K * z2;
    return xi * p.kick() * t / (p.mass * p.sigma0 * p.sigma0 * epsilon(t, p));
}

SpinorAmplitudes wavefunction(double z1, double z2, double t, const PhysParams& p, Sign s) {
    const double eps = epsilon(t, p);
    const double s2 = p.sigma0 * p.sigma0;
    const double s4 = s2 * s2;
    const double m = p.mass;
    const double hbar = p.hbar;
    const double a = p.kick();
    const double sK = to_double(s) * p.K;
    const double xi = z1 - sK * z2;
    const double r2 = z1 * z1 + z2 * z2;
    const double kick2 = (1.0 + p.K * p.K) * a * a;

    const double log_prefactor = -std::log(2.0 * p.sigma0 * std::sqrt(kPi * eps));
    const double common_real = -r2 / (4.0 * s2 * eps) - kick2 * t * t / (4.0 * m * m * s2 * eps);
    const double common_phase = -std::atan(hbar * t / (2.0 * s2 * m))
                                - kick2 * t / (2.0 * hbar * m * eps)
                                + hbar * t * r2 / (8.0 * m * s4 * eps);

    const double branch_real = xi * a * t / (2.0 * m * s2 * eps);
    const double branch_phase = hbar * xi * a * t * t / (4.0 * m * m * s4 * eps);
    const double field_pm = -(p.mu * p.T / hbar) * (p.B0 * (1.0 - sK) + p.B * z1 - sK * p.B * z2);
    const double field_mp = -(p.mu * p.T / hbar) * (p.B0 * (-1.0 + sK) - p.B * z1 + sK * p.B * z2);

    const double base = log_prefactor + common_real;
    SpinorAmplitudes out;
    out.c_plus_minus = std::polar(std::exp(base - branch_real), common_phase + field_pm + branch_phase);
    out.c_minus_plus = -std::polar(std::exp(base + branch_real), common_phase + field_mp - branch_phase);
    return out;
}

double log_density(double z1, double z2, double t, const PhysParams& p, Sign s) {
    const double eps = epsilon(t, p);
    return envelope_exponent(z1, z2, t, p, eps) + log_cosh(branch_argument(z1, z2, t, p, s));
}

double density(double z1, double z2, double t, const PhysParams& p, Sign s) {
    return std::exp(log_density(z1, z2, t, p, s));
}

double current1(double z1, double z2, double t, const PhysParams& p, Sign s) {
    const double eps = epsilon(t, p);
    const double s4 = std::pow(p.sigma0, 4);
    const auto h = scaled_hyperbolics(envelope_exponent(z1, z2, t, p, eps), branch_argument(z1, z2, t, p, s));
    return (p.hbar / p.mass)
           * (p.kick() / (p.hbar * eps) * h.sinh_part + p.hbar * t * z1 / (4.0 * p.mass * s4 * eps) * h.cosh_part);
}

double current2(double z1, double z2, double t, const PhysParams& p, Sign s) {
    const double eps = epsilon(t, p);
    const double s4 = std::pow(p.sigma0, 4);
    const double sK = to_double(s) * p.K;
    const auto h = scaled_hyperbolics(envelope_exponent(z1, z2, t, p, eps), branch_argument(z1, z2, t, p, s));
    return (p.hbar / p.mass)
           * (-sK * p.kick() / (p.hbar * eps) * h.sinh_part
              + p.hbar * t * z2 / (4.0 * p.mass * s4 * eps) * h.cosh_part);
}

double spreading_velocity(double z, double t, const PhysParams& p) {
    const double s4 = std::pow(p.sigma0, 4);
    return p.hbar * p.hbar * t * z / (4.0 * p.mass * p.mass * s4 * epsilon(t, p));
}

// std::tanh saturates to exactly +-1 in double precision beyond |X| ~ 19, so
// large arguments need no clamping.
double reduced_velocity1(double z1, double z2, double t, const PhysParams& p, Sign s) {
    return guidance_coefficient(t, p) * std::tanh(branch_argument(z1, z2, t, p, s));
}

double reduced_velocity2(double z1, double z2, double t, const PhysParams& p, Sign s) {
    return -to_double(s) * p.K * guidance_coefficient(t, p) * std::tanh(branch_argument(z1, z2, t, p, s));
}

double velocity1(double z1, double z2, double t, const PhysParams& p, Sign s) {
    return spreading_velocity(z1, t, p) + reduced_velocity1(z1, z2, t, p, s);
}

double velocity2(double z1, double z2, double t, const PhysParams& p, Sign s) {
    return spreading_velocity(z2, t, p) + reduced_velocity2(z1, z2, t, p, s);
}

BothVelocities velocities(double z1, double z2, double t, const PhysParams& p, Sign s) {
    const double s2 = p.sigma0 * p.sigma0;
    const double eps = epsilon(t, p);
    const double sK = to_double(s) * p.K;
    const double spread = p.hbar * p.hbar * t / (4.0 * p.mass * p.mass * s2 * s2 * eps);
    const double coeff = p.kick() / (p.mass * eps);
    const double th = std::tanh((z1 - sK * z2) * p.kick() * t / (p.mass * s2 * eps));
    return {spread * z1 + coeff * th, spread * z2 - sK * coeff * th};
}

PacketGeometry packet_geometry(double t, const PhysParams& p) {
    const double c1 = std::abs(p.kick() * t / p.mass);
    return {c1, p.K * c1, p.sigma0 * std::sqrt(epsilon(t, p))};
}

}  // namespace pilotkey
