#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oai/ising.hpp"

using namespace oai;
using std::numbers::pi;

TEST(Dispersion, ReferenceValues)
{
    EXPECT_NEAR(dispersion(1.0, 1e-9), 0.0, 1e-8);
    for (double q : {0.1, 1.0, 2.5}) EXPECT_DOUBLE_EQ(dispersion(0.0, q), 2.0);
    EXPECT_DOUBLE_EQ(dispersion(2.0, 0.0), 2.0);
}

TEST(Dispersion, MatchesModeMatrixAndIsEven)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> g(0.0, 6.0), q(-pi, pi);
    for (int k = 0; k < 1000; ++k) {
        const double gg = g(rng), qq = q(rng);
        EXPECT_NEAR(dispersion(gg, qq), mode_hamiltonian(gg, qq).energy(), 1e-12);
        EXPECT_DOUBLE_EQ(dispersion(gg, qq), dispersion(gg, -qq));
    }
}

TEST(Dispersion, MinimumGap)
{
    for (double g : {0.0, 0.3, 0.9, 1.0, 1.7, 4.0}) {
        double lo = 1e300;
        for (int k = 0; k <= 20000; ++k) lo = std::min(lo, dispersion(g, pi * k / 20000.0));
        EXPECT_NEAR(lo, 2.0 * std::abs(g - 1.0), 1e-9) << "g = " << g;
    }
}

TEST(ModeMatrix, OffDiagonalPositiveInsideZone)
{
    for (int k = 1; k < 100; ++k) EXPECT_GT(mode_hamiltonian(1.3, pi * k / 100.0).h_x, 0.0);
}

TEST(Eigenstates, HandSolvedGroundState)
{
    const auto gs = ground_state(2.0, pi / 2);
    EXPECT_NEAR(gs.u.real(), 0.2298, 1e-4);
    EXPECT_NEAR(gs.v.real(), -0.9732, 1e-4);
    EXPECT_EQ(gs.u.imag(), 0.0);
    EXPECT_EQ(gs.v.imag(), 0.0);
}

TEST(Eigenstates, FieldPolarizedLimit)
{
    const auto gs = ground_state(1e8, pi / 2);
    const auto ex = excited_state(1e8, pi / 2);
    EXPECT_NEAR(std::abs(gs.v), 1.0, 1e-7);
    EXPECT_NEAR(std::abs(inner(gs, ex)), 0.0, 1e-14);
}

TEST(Eigenstates, OrthonormalWithSmallResidual)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> g(0.0, 10.0), q(1e-3, pi - 1e-3);
    for (int k = 0; k < 1000; ++k) {
        const double gg = g(rng), qq = q(rng);
        const auto gs = ground_state(gg, qq);
        const auto ex = excited_state(gg, qq);
        EXPECT_LT(std::abs(gs.norm2() - 1.0), 1e-14);
        EXPECT_LT(std::abs(ex.norm2() - 1.0), 1e-14);
        EXPECT_LT(std::abs(inner(gs, ex)), 1e-14);

        const auto h = mode_hamiltonian(gg, qq);
        const double w = h.energy();
        for (auto [s, lam] : {std::pair{gs, -w}, {ex, w}}) {
            const cplx r0 = h.h_z * s.u + h.h_x * s.v - lam * s.u;
            const cplx r1 = h.h_x * s.u - h.h_z * s.v - lam * s.v;
            EXPECT_LT(std::sqrt(std::norm(r0) + std::norm(r1)), 1e-12);
        }
        // Phase convention: first nonzero component real and non-negative.
        EXPECT_GE(gs.u.real(), 0.0);
        EXPECT_EQ(gs.u.imag(), 0.0);
        EXPECT_GE(ex.u.real(), 0.0);
    }
}

TEST(Eigenstates, GapClosureIsAnError)
{
    EXPECT_THROW(ground_state(1.0, 0.0), DomainError);
    EXPECT_THROW(excited_state(1.0, 0.0), DomainError);
    EXPECT_NO_THROW(ground_state(1.0, 1e-3));
}

TEST(ModeGrid, SmallAndLargeGrids)
{
    const auto g4 = mode_grid(4);
    ASSERT_EQ(g4.size(), 2u);
    EXPECT_DOUBLE_EQ(g4.q[0], pi / 4);
    EXPECT_DOUBLE_EQ(g4.q[1], 3 * pi / 4);

    const auto g = mode_grid(2000);
    EXPECT_EQ(g.size(), 1000u);
    EXPECT_DOUBLE_EQ(g.q.back(), pi * 1999 / 2000);
    EXPECT_DOUBLE_EQ(g.spacing(), 2 * pi / 2000);
    for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g.q[k] - g.q[k - 1], g.spacing(), 1e-13);
    for (double q : g.q) {
        EXPECT_GT(q, 0.0);
        EXPECT_LT(q, pi);
    }
}

TEST(ModeGrid, InvalidSizes)
{
    EXPECT_THROW(mode_grid(2), DomainError);
    EXPECT_THROW(mode_grid(7), DomainError);
}

TEST(ModeGrid, QuadratureConverges)
{
    auto avg = [](std::size_t n, auto f) {
        const auto g = mode_grid(n);
        double acc = 0.0;
        for (double q : g.q) acc += f(q);
        return 2.0 * acc / static_cast<double>(n);
    };
    // (1/pi) int_0^pi sin^2 q dq = 1/2
    auto s2 = [](double q) { return std::sin(q) * std::sin(q); };
    for (std::size_t n : {100u, 1000u, 2000u}) EXPECT_NEAR(avg(n, s2), 0.5, 1e-12);
    // (1/pi) int_0^pi q^2 dq = pi^2/3; midpoint error falls as 1/N^2.
    auto q2 = [](double q) { return q * q; };
    const double e1 = std::abs(avg(200, q2) - pi * pi / 3);
    const double e2 = std::abs(avg(400, q2) - pi * pi / 3);
    EXPECT_NEAR(e1 / e2, 4.0, 0.05);
}
