#pragma once

// Momentum-mode data of the transverse-field Ising chain
//
//     H = -sum_j (sigma^x_j sigma^x_{j+1} + g sigma^z_j)
//
// after Jordan-Wigner and Fourier transformation.  Each momentum q in (0, pi)
// couples to its partner -q through the 2x2 Bogoliubov-de Gennes matrix
//
//     H_q(g) = [[ h_z,  h_x ],     h_z = 2 (g - cos q),  h_x = 2 sin q,
//               [ h_x, -h_z ]]
//
// whose eigenvalues are -/+ omega_q, omega_q = 2 sqrt(1 + g^2 - 2 g cos q).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "oai/error.hpp"
#include "oai/format.hpp"

namespace oai {

using cplx = std::complex<double>;

/// Normalized Bogoliubov amplitudes (u_q, v_q) of one mode.
struct ModeState {
    cplx u{1.0, 0.0};
    cplx v{0.0, 0.0};

    [[nodiscard]] double norm2() const noexcept { return std::norm(u) + std::norm(v); }
};

/// <a|b>
inline cplx inner(const ModeState& a, const ModeState& b) noexcept
{
    return std::conj(a.u) * b.u + std::conj(a.v) * b.v;
}

struct ModeHamiltonian {
    double q;
    double h_z;
    double h_x;

    [[nodiscard]] double energy() const noexcept { return std::hypot(h_z, h_x); }
};

inline ModeHamiltonian mode_hamiltonian(double g, double q) noexcept
{
    return {q, 2.0 * (g - std::cos(q)), 2.0 * std::sin(q)};
}

/// Quasiparticle dispersion omega_q = 2 sqrt(1 + g^2 - 2 g cos q).
inline double dispersion(double g, double q) noexcept
{
    return 2.0 * std::sqrt(std::max(0.0, 1.0 + g * g - 2.0 * g * std::cos(q)));
}

namespace detail {

// Eigenvector of [[hz, hx], [hx, -hz]] for eigenvalue sign * |h|, built from
// whichever matrix row gives the better-conditioned null vector.
inline ModeState eigenvector(double hz, double hx, double sign, double g, double q)
{
    const double w = std::hypot(hz, hx);
    if (!(w > 0.0) || w < 1e-300)
        throw DomainError("degenerate mode eigenproblem: gap closes at g = " + format_double(g) +
                          ", q = " + format_double(q));
    const double lam = sign * w;
    // Row 1: (hz - lam) u + hx v = 0  ->  (hx, lam - hz)
    // Row 2: hx u - (hz + lam) v = 0  ->  (hz + lam, hx)
    double a1 = hx, b1 = lam - hz;
    double a2 = hz + lam, b2 = hx;
    const double n1 = std::hypot(a1, b1);
    const double n2 = std::hypot(a2, b2);
    double a = 0.0, b = 0.0;
    if (n1 >= n2) {
        a = a1 / n1;
        b = b1 / n1;
    } else {
        a = a2 / n2;
        b = b2 / n2;
    }
    // First nonzero component real and non-negative.
    if (a < 0.0 || (a == 0.0 && b < 0.0)) {
        a = -a;
        b = -b;
    }
    return {cplx(a, 0.0), cplx(b, 0.0)};
}

} // namespace detail

/// Lower eigenvector of H_q(g); throws DomainError where the gap closes.
inline ModeState ground_state(double g, double q)
{
    const auto h = mode_hamiltonian(g, q);
    return detail::eigenvector(h.h_z, h.h_x, -1.0, g, q);
}

/// Upper eigenvector of H_q(g); throws DomainError where the gap closes.
inline ModeState excited_state(double g, double q)
{
    const auto h = mode_hamiltonian(g, q);
    return detail::eigenvector(h.h_z, h.h_x, +1.0, g, q);
}

/// Antiperiodic (even-parity) momenta q_m = pi (2m - 1) / N, m = 1..N/2.
struct ModeGrid {
    std::size_t sites = 0;
    std::vector<double> q;

    [[nodiscard]] std::size_t size() const noexcept { return q.size(); }
    [[nodiscard]] double spacing() const noexcept { return 2.0 * std::numbers::pi / static_cast<double>(sites); }
};

inline ModeGrid mode_grid(std::size_t n_sites)
{
    detail::require(n_sites >= 4, "mode grid: site count must be >= 4 (got " + std::to_string(n_sites) + ")");
    detail::require(n_sites % 2 == 0, "mode grid: site count must be even (got " + std::to_string(n_sites) + ")");
    ModeGrid grid;
    grid.sites = n_sites;
    grid.q.reserve(n_sites / 2);
    for (std::size_t m = 1; m <= n_sites / 2; ++m)
        grid.q.push_back(std::numbers::pi * static_cast<double>(2 * m - 1) / static_cast<double>(n_sites));
    return grid;
}

} // namespace oai
