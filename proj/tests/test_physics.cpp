#include "pilotkey/physics.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

using namespace pilotkey;

namespace {

constexpr double kPi = std::numbers::pi;

PhysParams natural(double kick = 5.0, double K = 2.0) {
    PhysParams p;
    p.B = kick;
    p.K = K;
    p.d = 1.0;
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// Probability current from the spinor by central differences:
// j_a = (hbar/m) Im(Psi^dagger d_a Psi), summed over both spin components.
template <class Psi>
double current_from_psi(Psi psi, double z1, double z2, double t, const PhysParams& p, int axis) {
    const double h = 1e-5;
    const auto c = psi(z1, z2);
    const auto up = axis == 1 ? psi(z1 + h, z2) : psi(z1, z2 + h);
    const auto dn = axis == 1 ? psi(z1 - h, z2) : psi(z1, z2 - h);
    const auto d_pm = (up.c_plus_minus - dn.c_plus_minus) / (2.0 * h);
    const auto d_mp = (up.c_minus_plus - dn.c_minus_plus) / (2.0 * h);
    (void)t;
    return p.hbar / p.mass * (std::conj(c.c_plus_minus) * d_pm + std::conj(c.c_minus_plus) * d_mp).imag();
}

}  // namespace

TEST(Epsilon, Examples) {
    PhysParams p;
    EXPECT_EQ(epsilon(0.0, p), 1.0);
    EXPECT_DOUBLE_EQ(epsilon(2.0, p), 2.0);
    EXPECT_DOUBLE_EQ(epsilon(1.0, p), 1.25);
}

TEST(Epsilon, MonotoneAndAtLeastOne) {
    PhysParams p;
    p.sigma0 = 0.7;
    p.mass = 2.5;
    p.hbar = 1.3;
    double prev = epsilon(0.0, p);
    for (double t = 0.01; t < 50.0; t *= 1.3) {
        const double e = epsilon(t, p);
        EXPECT_GE(e, 1.0);
        EXPECT_GE(e, prev);
        prev = e;
    }
}

TEST(Wavefunction, OriginAtTimeZeroSplitsEvenly) {
    const auto c = wavefunction(0.0, 0.0, 0.0, natural(), Sign::plus);
    EXPECT_NEAR(std::norm(c.c_plus_minus), 1.0 / (4.0 * kPi), 1e-15);
    EXPECT_NEAR(std::norm(c.c_minus_plus), 1.0 / (4.0 * kPi), 1e-15);
}

TEST(Wavefunction, ComponentMagnitudesSwapUnderBranchReflection) {
    // The real exponent of c+- at xi equals that of c-+ at -xi.
    const auto p = natural();
    for (Sign s : {Sign::plus, Sign::minus}) {
        const auto a = wavefunction(0.4, -0.9, 0.7, p, s);
        const auto b = wavefunction(-0.4, 0.9, 0.7, p, s);
        EXPECT_NEAR(std::abs(a.c_plus_minus), std::abs(b.c_minus_plus), 1e-15);
        EXPECT_NEAR(std::abs(a.c_minus_plus), std::abs(b.c_plus_minus), 1e-15);
    }
}

TEST(Wavefunction, NormSquaredMatchesDensityOnGrid) {
    const auto p = natural();
    for (Sign s : {Sign::plus, Sign::minus}) {
        for (double t : {0.0, 0.5, 2.0}) {
            for (int i = 0; i < 21; ++i) {
                for (int k = 0; k < 21; ++k) {
                    const double z1 = -5.0 + 0.5 * i;
                    const double z2 = -5.0 + 0.5 * k;
                    const double rho = density(z1, z2, t, p, s);
                    if (rho < 1e-300) continue;
                    EXPECT_LT(rel(wavefunction(z1, z2, t, p, s).norm2(), rho), 1e-10) << z1 << ' ' << z2 << ' ' << t;
                }
            }
        }
    }
}

TEST(Wavefunction, PrintedPhasesReproduceCurrents) {
    // The printed closed form, differentiated numerically, gives j1 and j2.
    // Replacing +sKBz2 by -sKBz2 in the u-v+ phase (the variant of the
    // intermediate expression) breaks j2.
    const auto p = natural(2.0, 2.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (Sign s : {Sign::plus, Sign::minus}) {
        double worst_printed = 0.0;
        double worst_variant = 0.0;
        for (int n = 0; n < 50; ++n) {
            const double z1 = u(rng);
            const double z2 = u(rng);
            const double t = 0.1 + 0.5 * (u(rng) + 2.0);
            auto printed = [&](double a, double b) { return wavefunction(a, b, t, p, s); };
            auto variant = [&](double a, double b) {
                auto c = wavefunction(a, b, t, p, s);
                const double extra = 2.0 * to_double(s) * p.K * p.B * p.mu * p.T * b / p.hbar;
                c.c_minus_plus *= std::polar(1.0, extra);
                return c;
            };
            const double ref1 = current1(z1, z2, t, p, s);
            const double ref2 = current2(z1, z2, t, p, s);
            const double scale = density(z1, z2, t, p, s) * (p.kick() * p.K / p.mass + 1.0);
            worst_printed = std::max({worst_printed, std::abs(current_from_psi(printed, z1, z2, t, p, 1) - ref1) / scale,
                                      std::abs(current_from_psi(printed, z1, z2, t, p, 2) - ref2) / scale});
            worst_variant = std::max(worst_variant, std::abs(current_from_psi(variant, z1, z2, t, p, 2) - ref2) / scale);
        }
        EXPECT_LT(worst_printed, 1e-7);
        EXPECT_GT(worst_variant, 1e-2);
    }
}

TEST(Density, Examples) {
    const auto p = natural();
    EXPECT_NEAR(density(0.0, 0.0, 0.0, p, Sign::plus), 1.0 / (2.0 * kPi), 1e-15);
    EXPECT_NEAR(density(0.0, 0.0, 0.0, p, Sign::plus), 0.159155, 1e-6);
    EXPECT_NEAR(density(1.0, 0.0, 0.0, p, Sign::minus), std::exp(-0.5) / (2.0 * kPi), 1e-15);
    EXPECT_NEAR(density(1.0, 0.0, 0.0, p, Sign::minus), 0.096532, 1e-6);
}

TEST(Density, TimeZeroIsGaussianProduct) {
    PhysParams p = natural(7.0, 3.0);
    p.sigma0 = 0.6;
    for (double z1 : {-1.3, 0.0, 0.2, 2.1}) {
        for (double z2 : {-0.7, 0.0, 1.9}) {
            const double g = std::exp(-(z1 * z1 + z2 * z2) / (2.0 * 0.36)) / (2.0 * kPi * 0.36);
            EXPECT_LT(rel(density(z1, z2, 0.0, p, Sign::plus), g), 1e-14);
        }
    }
}

TEST(Density, ParitySymmetry) {
    const auto p = natural();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int n = 0; n < 200; ++n) {
        const double z1 = u(rng), z2 = u(rng), t = std::abs(u(rng));
        for (Sign s : {Sign::plus, Sign::minus}) {
            EXPECT_EQ(density(z1, z2, t, p, s), density(-z1, -z2, t, p, s));
            EXPECT_DOUBLE_EQ(velocity1(z1, z2, t, p, s), -velocity1(-z1, -z2, t, p, s));
            EXPECT_DOUBLE_EQ(velocity2(z1, z2, t, p, s), -velocity2(-z1, -z2, t, p, s));
        }
    }
}

TEST(Density, NormalisedByAdaptiveQuadrature) {
    using boost::math::quadrature::gauss_kronrod;
    for (const auto& p : {natural(1.0, 2.0), strong_field_params()}) {
        for (double t : {0.0, 1.0, 5.0}) {
            for (Sign s : {Sign::plus, Sign::minus}) {
                const auto geo = packet_geometry(t, p);
                const double h1 = 10.0 * geo.width + geo.center1;
                const double h2 = 10.0 * geo.width + geo.center2;
                auto inner = [&](double z1) {
                    return gauss_kronrod<double, 31>::integrate([&](double z2) { return density(z1, z2, t, p, s); },
                                                                -h2, h2, 20, 1e-12);
                };
                const double mass = gauss_kronrod<double, 31>::integrate(inner, -h1, h1, 20, 1e-12);
                EXPECT_NEAR(mass, 1.0, 1e-6) << "kick=" << p.kick() << " t=" << t;
            }
        }
    }
}

TEST(Density, StrongArgumentsStayFinite) {
    const auto p = PhysParams{};
    for (double z : {-80.0, -5.0, 5.0, 80.0}) {
        for (double t : {0.01, 0.3, 3.0}) {
            const double rho = density(z, -z, t, p, Sign::plus);
            EXPECT_TRUE(std::isfinite(rho));
            EXPECT_GE(rho, 0.0);
            EXPECT_TRUE(std::isfinite(current1(z, -z, t, p, Sign::plus)));
            EXPECT_TRUE(std::isfinite(current2(z, -z, t, p, Sign::plus)));
            EXPECT_TRUE(std::isfinite(velocity2(z, -z, t, p, Sign::plus)));
        }
    }
    // At the branch centre the density is O(1) even though |X| is in the thousands.
    const auto geo = packet_geometry(2.0, p);
    EXPECT_GT(std::abs(branch_argument(geo.center1, -geo.center2, 2.0, p, Sign::plus)), 1e3);
    EXPECT_GT(density(geo.center1, -geo.center2, 2.0, p, Sign::plus), 1e-3);
}

TEST(Current, VanishesAtTimeZero) {
    const auto p = natural();
    for (double z1 : {-2.0, 0.3, 1.5}) {
        for (double z2 : {-1.0, 0.0, 2.2}) {
            EXPECT_EQ(current1(z1, z2, 0.0, p, Sign::plus), 0.0);
            EXPECT_EQ(current2(z1, z2, 0.0, p, Sign::minus), 0.0);
        }
    }
}

TEST(Current, EqualsDensityTimesVelocity) {
    const auto p = natural();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int n = 0; n < 100; ++n) {
        const double z1 = u(rng), z2 = u(rng), t = 0.05 + std::abs(u(rng));
        for (Sign s : {Sign::plus, Sign::minus}) {
            const double rho = density(z1, z2, t, p, s);
            const double scale1 = rho * (std::abs(spreading_velocity(z1, t, p)) + std::abs(reduced_velocity1(z1, z2, t, p, s)));
            const double scale2 = rho * (std::abs(spreading_velocity(z2, t, p)) + std::abs(reduced_velocity2(z1, z2, t, p, s)));
            EXPECT_LE(std::abs(current1(z1, z2, t, p, s) - rho * velocity1(z1, z2, t, p, s)), 1e-10 * scale1);
            EXPECT_LE(std::abs(current2(z1, z2, t, p, s) - rho * velocity2(z1, z2, t, p, s)), 1e-10 * scale2);
        }
    }
}

TEST(Current, SatisfiesContinuityByFiniteDifferences) {
    const auto p = natural(2.0, 2.0);
    auto residual = [&](double z1, double z2, double t, double h) {
        const Sign s = Sign::minus;
        return (density(z1, z2, t + h, p, s) - density(z1, z2, t - h, p, s)) / (2 * h) +
               (current1(z1 + h, z2, t, p, s) - current1(z1 - h, z2, t, p, s)) / (2 * h) +
               (current2(z1, z2 + h, t, p, s) - current2(z1, z2 - h, t, p, s)) / (2 * h);
    };
    for (double t : {0.3, 1.0}) {
        for (double z1 : {-1.0, 0.4}) {
            for (double z2 : {-0.5, 1.2}) {
                const double r1 = residual(z1, z2, t, 1e-2);
                const double r2 = residual(z1, z2, t, 5e-3);
                EXPECT_LT(std::abs(r1), 1e-3);
                EXPECT_NEAR(r1 / r2, 4.0, 0.1);
            }
        }
    }
}

TEST(Velocity, ZeroOnTheOrigin) {
    const auto p = natural();
    for (double t : {0.0, 0.1, 3.0, 100.0}) {
        EXPECT_EQ(velocity1(0.0, 0.0, t, p, Sign::plus), 0.0);
        EXPECT_EQ(velocity2(0.0, 0.0, t, p, Sign::minus), 0.0);
    }
}

TEST(Velocity, HomogeneousFieldLeavesOnlySpreading) {
    auto p = natural();
    p.B = 0.0;
    for (double t : {0.2, 1.0, 4.0}) {
        const double eps = epsilon(t, p);
        EXPECT_DOUBLE_EQ(velocity1(1.3, -0.4, t, p, Sign::plus), t * 1.3 / (4.0 * eps));
        EXPECT_DOUBLE_EQ(velocity2(1.3, -0.4, t, p, Sign::plus), t * -0.4 / (4.0 * eps));
    }
}

TEST(Velocity, GuidanceBoundedByCoefficient) {
    const auto p = natural();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int n = 0; n < 500; ++n) {
        const double z1 = u(rng), z2 = u(rng), t = std::abs(u(rng));
        const double bound = p.kick() / (p.mass * epsilon(t, p));
        EXPECT_LE(std::abs(velocity1(z1, z2, t, p, Sign::plus) - spreading_velocity(z1, t, p)), bound * (1 + 1e-15));
        EXPECT_LE(std::abs(reduced_velocity2(z1, z2, t, p, Sign::minus)), p.K * bound * (1 + 1e-15));
    }
}

TEST(Velocity, GuidanceDecaysAtLateTimes) {
    const auto p = natural(5.0, 2.0);
    const double z1 = 0.8, z2 = -0.3;
    double peak = 0.0;
    for (double t = 1e-3; t < 10.0; t += 1e-3) peak = std::max(peak, std::abs(reduced_velocity1(z1, z2, t, p, Sign::plus)));
    EXPECT_LT(std::abs(reduced_velocity1(z1, z2, 1e4, p, Sign::plus)), 1e-3 * peak);
}

TEST(Velocity, GuidanceMonotoneBeyondSpreadingTime) {
    // d/dt of (a/eps) tanh(c t/eps) is negative once t > 2 m sigma0^2 / hbar.
    const auto p = natural(5.0, 2.0);
    const double t_star = 2.0 * p.mass * p.sigma0 * p.sigma0 / p.hbar;
    for (double z1 : {-2.0, -0.01, 0.5, 3.0}) {
        for (double z2 : {-1.0, 0.02, 1.5}) {
            double prev = std::abs(reduced_velocity1(z1, z2, t_star, p, Sign::plus));
            for (double t = t_star * 1.01; t < 2000.0; t *= 1.01) {
                const double g = std::abs(reduced_velocity1(z1, z2, t, p, Sign::plus));
                EXPECT_LE(g, prev * (1 + 1e-12));
                prev = g;
            }
        }
    }
}

TEST(ReducedVelocity, Signs) {
    const auto p = natural();
    EXPECT_EQ(reduced_velocity1(1.0, 0.5, 0.7, p, Sign::plus), 0.0);  // z1 = sK z2
    EXPECT_EQ(reduced_velocity2(-1.0, 0.5, 0.7, p, Sign::minus), 0.0);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int n = 0; n < 300; ++n) {
        const double z1 = u(rng), z2 = u(rng), t = 0.01 + std::abs(u(rng));
        for (Sign s : {Sign::plus, Sign::minus}) {
            const double xi = z1 - to_double(s) * p.K * z2;
            EXPECT_EQ(sign_of(reduced_velocity1(z1, z2, t, p, s)), sign_of(xi));
            EXPECT_EQ(sign_of(reduced_velocity2(z1, z2, t, p, s)), -(s * sign_of(xi)));
        }
    }
}

TEST(Velocities, CombinedMatchesSeparate) {
    const auto p = PhysParams{};
    const auto v = velocities(0.3, -0.02, 0.4, p, Sign::minus);
    EXPECT_DOUBLE_EQ(v.v1, velocity1(0.3, -0.02, 0.4, p, Sign::minus));
    EXPECT_DOUBLE_EQ(v.v2, velocity2(0.3, -0.02, 0.4, p, Sign::minus));
}

TEST(PhysParams, Validation) {
    EXPECT_NO_THROW(PhysParams{}.validate());
    EXPECT_NO_THROW(strong_field_params().validate());
    auto p = PhysParams{};
    p.K = 1.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = PhysParams{};
    p.B = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    EXPECT_NO_THROW(p.validate_kinematics());
    p.sigma0 = -1.0;
    EXPECT_THROW(p.validate_kinematics(), std::invalid_argument);
}

TEST(SignOf, RejectsZero) {
    EXPECT_EQ(sign_of(2.0), Sign::plus);
    EXPECT_EQ(sign_of(-1e-300), Sign::minus);
    EXPECT_THROW(sign_of(0.0), std::domain_error);
    EXPECT_THROW(sign_of(std::nan("")), std::domain_error);
}
