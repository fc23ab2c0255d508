#pragma once

// Closed-form evaluation of the post-field two-particle singlet state in the
// double Stern-Gerlach setup: spinor amplitudes, density, currents and the
// guidance velocities that drive the Bohmian trajectories.
//
// Time t is measured from the exit of the field region. The impulsive field
// phase of duration T enters only through the momentum kick B*mu*T.

#include <complex>
#include <stdexcept>

namespace pilotkey {

/// A sign in {+1, -1}. Used for Bob's field flip s and for measured sides.
enum class Sign : int { minus = -1, plus = 1 };

constexpr int to_int(Sign s) { return static_cast<int>(s); }
constexpr double to_double(Sign s) { return static_cast<double>(to_int(s)); }
constexpr Sign operator-(Sign s) { return s == Sign::plus ? Sign::minus : Sign::plus; }
constexpr Sign operator*(Sign a, Sign b) { return a == b ? Sign::plus : Sign::minus; }

/// Sign of a nonzero value; throws std::domain_error on zero or NaN.
Sign sign_of(double x);

/// Bob's device alignment relative to Alice's: delta in {0, pi/2}.
enum class Alignment : int { aligned = 0, orthogonal = 1 };

double alignment_angle(Alignment a);

struct PhysParams {
    double hbar = 1.0;
    double mass = 1.0;
    double mu = 1.0;
    double B0 = 0.0;
    double B = 10.0;
    double K = 30.0;
    double T = 1.0;
    double sigma0 = 1.0;
    double d = 6.0;

    /// Momentum kick B*mu*T delivered by the field.
    double kick() const { return B * mu * T; }
    /// Full device invariants (B > 0, K > 1 and positive scales).
    /// Throws std::invalid_argument.
    void validate() const;
    /// Positive hbar, mass, sigma0, T, d only. The closed forms and the
    /// integrator remain meaningful for B = 0 (homogeneous field).
    void validate_kinematics() const;
};

/// Strong-field preset in natural units: B*mu*T/hbar = 10, K = 2, sigma0 = 1, d = 1.
PhysParams strong_field_params();

struct RoundSettings {
    Sign s = Sign::plus;
    Alignment delta = Alignment::aligned;
};

/// Amplitudes of the u+v- and u-v+ components. The u+v+ and u-v- components
/// vanish identically and are not represented.
struct SpinorAmplitudes {
    std::complex<double> c_plus_minus;
    std::complex<double> c_minus_plus;

    double norm2() const { return std::norm(c_plus_minus) + std::norm(c_minus_plus); }
};

/// Packet-spread factor 1 + hbar^2 t^2 / (4 sigma0^4 m^2).
double epsilon(double t, const PhysParams& p);

/// X = (z1 - sK z2) B mu T t / (m sigma0^2 eps), the argument shared by the
/// cosh/sinh/tanh factors.
double branch_argument(double z1, double z2, double t, const PhysParams& p, Sign s);

SpinorAmplitudes wavefunction(double z1, double z2, double t, const PhysParams& p, Sign s);

double density(double z1, double z2, double t, const PhysParams& p, Sign s);
double log_density(double z1, double z2, double t, const PhysParams& p, Sign s);

double current1(double z1, double z2, double t, const PhysParams& p, Sign s);
double current2(double z1, double z2, double t, const PhysParams& p, Sign s);

/// Spreading part hbar^2 t z / (4 m^2 sigma0^4 eps), identical in form for both particles.
double spreading_velocity(double z, double t, const PhysParams& p);

double velocity1(double z1, double z2, double t, const PhysParams& p, Sign s);
double velocity2(double z1, double z2, double t, const PhysParams& p, Sign s);

/// Guidance (tanh) parts of velocity1/velocity2 with the spreading term dropped.
double reduced_velocity1(double z1, double z2, double t, const PhysParams& p, Sign s);
double reduced_velocity2(double z1, double z2, double t, const PhysParams& p, Sign s);

struct BothVelocities {
    double v1;
    double v2;
};

/// velocity1 and velocity2 in one pass; the integrator's right-hand side.
BothVelocities velocities(double z1, double z2, double t, const PhysParams& p, Sign s);

/// Packet centre offsets (|c1|, |c2|) = (BmuT t/m, K BmuT t/m) of the two
/// branches at time t, and the per-axis packet width sigma0*sqrt(eps).
struct PacketGeometry {
    double center1;
    double center2;
    double width;
};

PacketGeometry packet_geometry(double t, const PhysParams& p);

}  // namespace pilotkey
