#pragma once

// Mode-resolved quench dynamics of the transverse-field Ising chain.
//
// Pure dynamics integrates the time-dependent Bogoliubov-de Gennes equations
//
//     i d/dt (u_q, v_q)^T = H_q(g(t)) (u_q, v_q)^T
//
// and noisy dynamics the per-mode dephasing master equation
//
//     d rho_q/dt = -i [H_q(g(t)), rho_q] - (kappa/2) [sigma_z, [sigma_z, rho_q]],
//     kappa = noise_rate_scale * W^2,
//
// propagated in Bloch form rho_q = (1 + S . sigma)/2:
//
//     dS/dt = 2 h x S - 2 kappa (S_x, S_y, 0),   h = (h_x, 0, h_z).
//
// Both use classical fixed-step RK4 with dt = eta / max(omega_max, kappa, 1)
// and omega_max = 2 (1 + max_t |g(t)|), batched over modes so the schedule is
// evaluated once per stage.  Every mode is advanced by the same sequence of
// floating-point operations regardless of batching, which keeps results
// independent of the worker count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oai/error.hpp"
#include "oai/format.hpp"
#include "oai/ising.hpp"
#include "oai/parallel.hpp"
#include "oai/protocols.hpp"

namespace oai {

struct StepPolicy {
    double eta = 0.02;              ///< step factor
    std::size_t check_every = 100;  ///< invariant check period, in steps
    double noise_rate_scale = 1.0;  ///< multiplies W^2 in the dephasing rate

    void validate() const
    {
        detail::require(eta > 0.0 && std::isfinite(eta), "step factor eta must be positive");
        detail::require(check_every >= 1, "invariant check period must be >= 1");
        detail::require(noise_rate_scale >= 0.0 && std::isfinite(noise_rate_scale),
                        "noise_rate_scale must be non-negative");
    }
};

/// Abort thresholds.
inline constexpr double kNormAbort = 1e-6;
inline constexpr double kPositivityAbort = 1e-8;

/// 2x2 density matrix of one mode, stored as its Bloch vector.
class ModeDensity {
public:
    ModeDensity() = default;
    ModeDensity(double x, double y, double z) noexcept : s_{x, y, z} {}

    static ModeDensity from_state(const ModeState& psi) noexcept
    {
        const cplx c = std::conj(psi.u) * psi.v;
        return {2.0 * c.real(), 2.0 * c.imag(), std::norm(psi.u) - std::norm(psi.v)};
    }

    static ModeDensity maximally_mixed() noexcept { return {0.0, 0.0, 0.0}; }

    [[nodiscard]] const std::array<double, 3>& bloch() const noexcept { return s_; }

    /// rho_{ij}, i, j in {0, 1}; basis order (u, v).
    [[nodiscard]] cplx element(int i, int j) const noexcept
    {
        if (i == 0 && j == 0) return {0.5 * (1.0 + s_[2]), 0.0};
        if (i == 1 && j == 1) return {0.5 * (1.0 - s_[2]), 0.0};
        if (i == 0) return {0.5 * s_[0], -0.5 * s_[1]};
        return {0.5 * s_[0], 0.5 * s_[1]};
    }

    [[nodiscard]] double trace() const noexcept { return (element(0, 0) + element(1, 1)).real(); }

    /// Eigenvalues (1 -/+ |S|) / 2, ascending.
    [[nodiscard]] std::array<double, 2> eigenvalues() const noexcept
    {
        const double r = std::sqrt(s_[0] * s_[0] + s_[1] * s_[1] + s_[2] * s_[2]);
        return {0.5 * (1.0 - r), 0.5 * (1.0 + r)};
    }

private:
    std::array<double, 3> s_{0.0, 0.0, 1.0};
};

/// p_q = |<ex(g_f, q)|psi>|^2.
inline double excitation_probability(const ModeState& psi, double q, double g_f)
{
    return std::norm(inner(excited_state(g_f, q), psi));
}

/// p_q = <ex(g_f, q)| rho |ex(g_f, q)>.
inline double excitation_probability(const ModeDensity& rho, double q, double g_f)
{
    const auto ex = excited_state(g_f, q);
    cplx acc{0.0, 0.0};
    const std::array<cplx, 2> e{ex.u, ex.v};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) acc += std::conj(e[i]) * rho.element(i, j) * e[j];
    return acc.real();
}

/// Uniform time grid from t0 to t1 (t1 < t0 integrates backwards).
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 0.0;
    std::size_t steps = 0;
    double dt = 0.0;

    [[nodiscard]] double at(std::size_t k) const noexcept
    {
        return k >= steps ? t1 : t0 + static_cast<double>(k) * dt;
    }
};

/// Largest admissible step for a drive with max |g| = g_abs_max.
inline double max_step(double g_abs_max, double noise_rate, double eta) noexcept
{
    return eta / std::max({2.0 * (1.0 + g_abs_max), noise_rate, 1.0});
}

inline TimeGrid make_time_grid(double t0, double t1, double dt_max)
{
    detail::require(dt_max > 0.0, "time step must be positive");
    const double span = std::abs(t1 - t0);
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / dt_max)));
    return {t0, t1, steps, (t1 - t0) / static_cast<double>(steps)};
}

struct IntegratorStats {
    std::size_t steps = 0;
    double dt = 0.0;
    double max_norm_drift = 0.0; ///< pure: max | |u|^2+|v|^2 - 1 |; noisy: max (|S| - 1)^+
};

namespace detail {

struct PureBatch {
    std::vector<double> ur, ui, vr, vi, c2, hx;
};

// One RK4 step of i d/dt psi = H psi for a single mode, H = [[hz, hx], [hx, -hz]].
// hz = G - c2 with G = 2 g(t) at the start, middle and end of the step.
// With A = H psi the derivative is -i A, i.e. (Re, Im) -> (Im A, -Re A).
inline void rk4_pure(double& ur, double& ui, double& vr, double& vi, double c2, double hx, double G0, double Gm,
                     double G1, double h) noexcept
{
    const double hz0 = G0 - c2, hzm = Gm - c2, hz1 = G1 - c2;
    const double hh = 0.5 * h;

    const double k1ur = hz0 * ui + hx * vi;
    const double k1ui = -(hz0 * ur + hx * vr);
    const double k1vr = hx * ui - hz0 * vi;
    const double k1vi = -(hx * ur - hz0 * vr);

    double tur = ur + hh * k1ur, tui = ui + hh * k1ui, tvr = vr + hh * k1vr, tvi = vi + hh * k1vi;
    const double k2ur = hzm * tui + hx * tvi;
    const double k2ui = -(hzm * tur + hx * tvr);
    const double k2vr = hx * tui - hzm * tvi;
    const double k2vi = -(hx * tur - hzm * tvr);

    tur = ur + hh * k2ur, tui = ui + hh * k2ui, tvr = vr + hh * k2vr, tvi = vi + hh * k2vi;
    const double k3ur = hzm * tui + hx * tvi;
    const double k3ui = -(hzm * tur + hx * tvr);
    const double k3vr = hx * tui - hzm * tvi;
    const double k3vi = -(hx * tur - hzm * tvr);

    tur = ur + h * k3ur, tui = ui + h * k3ui, tvr = vr + h * k3vr, tvi = vi + h * k3vi;
    const double k4ur = hz1 * tui + hx * tvi;
    const double k4ui = -(hz1 * tur + hx * tvr);
    const double k4vr = hx * tui - hz1 * tvi;
    const double k4vi = -(hx * tur - hz1 * tvr);

    const double h6 = h / 6.0;
    ur += h6 * (k1ur + 2.0 * k2ur + 2.0 * k3ur + k4ur);
    ui += h6 * (k1ui + 2.0 * k2ui + 2.0 * k3ui + k4ui);
    vr += h6 * (k1vr + 2.0 * k2vr + 2.0 * k3vr + k4vr);
    vi += h6 * (k1vi + 2.0 * k2vi + 2.0 * k3vi + k4vi);
}

// One RK4 step of the Bloch equations with dephasing rate kappa.
inline void rk4_bloch(double& x, double& y, double& z, double c2, double hx, double kappa, double G0, double Gm,
                      double G1, double h) noexcept
{
    const double k2x = 2.0 * kappa;
    auto rhs = [hx, k2x](double hz, double x_, double y_, double z_, double& dx, double& dy, double& dz) {
        dx = -2.0 * hz * y_ - k2x * x_;
        dy = 2.0 * hz * x_ - 2.0 * hx * z_ - k2x * y_;
        dz = 2.0 * hx * y_;
    };
    const double hz0 = G0 - c2, hzm = Gm - c2, hz1 = G1 - c2;
    const double hh = 0.5 * h;
    double a[3], b[3], c[3], d[3];
    rhs(hz0, x, y, z, a[0], a[1], a[2]);
    rhs(hzm, x + hh * a[0], y + hh * a[1], z + hh * a[2], b[0], b[1], b[2]);
    rhs(hzm, x + hh * b[0], y + hh * b[1], z + hh * b[2], c[0], c[1], c[2]);
    rhs(hz1, x + h * c[0], y + h * c[1], z + h * c[2], d[0], d[1], d[2]);
    const double h6 = h / 6.0;
    x += h6 * (a[0] + 2.0 * b[0] + 2.0 * c[0] + d[0]);
    y += h6 * (a[1] + 2.0 * b[1] + 2.0 * c[1] + d[1]);
    z += h6 * (a[2] + 2.0 * b[2] + 2.0 * c[2] + d[2]);
}

inline std::string step_diagnostic(const TimeGrid& grid, std::size_t k)
{
    return "at t = " + format_double(grid.at(k)) + " (step " + std::to_string(k) + " of " +
           std::to_string(grid.steps) + ", dt = " + format_double(grid.dt) + "); reduce the step factor eta";
}

} // namespace detail

/// Propagates a batch of pure mode states along `coupling` over `grid`.
/// `coupling` maps t to g(t).
template <class Coupling>
IntegratorStats propagate_pure(const Coupling& coupling, const TimeGrid& grid, std::span<const double> qs,
                               std::span<ModeState> states, const StepPolicy& policy)
{
    detail::require(qs.size() == states.size(), "propagate_pure: momentum and state counts differ");
    const std::size_t m = qs.size();
    detail::PureBatch b;
    b.ur.resize(m);
    b.ui.resize(m);
    b.vr.resize(m);
    b.vi.resize(m);
    b.c2.resize(m);
    b.hx.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        b.ur[j] = states[j].u.real();
        b.ui[j] = states[j].u.imag();
        b.vr[j] = states[j].v.real();
        b.vi[j] = states[j].v.imag();
        b.c2[j] = 2.0 * std::cos(qs[j]);
        b.hx[j] = 2.0 * std::sin(qs[j]);
    }
    IntegratorStats stats{grid.steps, grid.dt, 0.0};
    const double h = grid.dt;
    double G0 = 2.0 * coupling(grid.at(0));
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double Gm = 2.0 * coupling(grid.at(k) + 0.5 * h);
        const double G1 = 2.0 * coupling(grid.at(k + 1));
        double* ur = b.ur.data();
        double* ui = b.ui.data();
        double* vr = b.vr.data();
        double* vi = b.vi.data();
        const double* c2 = b.c2.data();
        const double* hx = b.hx.data();
        for (std::size_t j = 0; j < m; ++j) detail::rk4_pure(ur[j], ui[j], vr[j], vi[j], c2[j], hx[j], G0, Gm, G1, h);
        G0 = G1;
        if ((k + 1) % policy.check_every == 0 || k + 1 == grid.steps) {
            for (std::size_t j = 0; j < m; ++j) {
                const double drift = std::abs(ur[j] * ur[j] + ui[j] * ui[j] + vr[j] * vr[j] + vi[j] * vi[j] - 1.0);
                stats.max_norm_drift = std::max(stats.max_norm_drift, drift);
                if (!(drift <= kNormAbort))
                    throw IntegrationError("norm drift " + format_double(drift) + " for mode q = " +
                                           format_double(qs[j]) + " " + detail::step_diagnostic(grid, k + 1));
            }
        }
    }
    for (std::size_t j = 0; j < m; ++j) states[j] = {cplx(b.ur[j], b.ui[j]), cplx(b.vr[j], b.vi[j])};
    return stats;
}

/// Propagates a batch of mode densities along `coupling` with dephasing rate kappa.
template <class Coupling>
IntegratorStats propagate_lindblad(const Coupling& coupling, const TimeGrid& grid, double kappa,
                                   std::span<const double> qs, std::span<ModeDensity> rhos, const StepPolicy& policy)
{
    detail::require(qs.size() == rhos.size(), "propagate_lindblad: momentum and density counts differ");
    detail::require(kappa >= 0.0, "dephasing rate must be non-negative");
    const std::size_t m = qs.size();
    std::vector<double> x(m), y(m), z(m), c2(m), hx(m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto& s = rhos[j].bloch();
        x[j] = s[0];
        y[j] = s[1];
        z[j] = s[2];
        c2[j] = 2.0 * std::cos(qs[j]);
        hx[j] = 2.0 * std::sin(qs[j]);
    }
    IntegratorStats stats{grid.steps, grid.dt, 0.0};
    const double h = grid.dt;
    double G0 = 2.0 * coupling(grid.at(0));
    for (std::size_t k = 0; k < grid.steps; ++k) {
        const double Gm = 2.0 * coupling(grid.at(k) + 0.5 * h);
        const double G1 = 2.0 * coupling(grid.at(k + 1));
        for (std::size_t j = 0; j < m; ++j) detail::rk4_bloch(x[j], y[j], z[j], c2[j], hx[j], kappa, G0, Gm, G1, h);
        G0 = G1;
        if ((k + 1) % policy.check_every == 0 || k + 1 == grid.steps) {
            for (std::size_t j = 0; j < m; ++j) {
                const double len = std::sqrt(x[j] * x[j] + y[j] * y[j] + z[j] * z[j]);
                // Lowest eigenvalue is (1 - |S|)/2.
                const double excess = 0.5 * (len - 1.0);
                stats.max_norm_drift = std::max(stats.max_norm_drift, std::max(0.0, len - 1.0));
                if (!(excess <= kPositivityAbort))
                    throw IntegrationError("density matrix lost positivity (lowest eigenvalue " +
                                           format_double(-excess) + ") for mode q = " + format_double(qs[j]) + " " +
                                           detail::step_diagnostic(grid, k + 1));
            }
        }
    }
    for (std::size_t j = 0; j < m; ++j) rhos[j] = ModeDensity(x[j], y[j], z[j]);
    return stats;
}

namespace detail {

inline auto schedule_coupling(const QuenchProtocol& p)
{
    return [&p](double t) { return p.coupling_at(std::clamp(t, p.t_i(), p.t_f())); };
}

inline double coupling_peak(const QuenchProtocol& p) noexcept { return std::max(std::abs(p.g_i()), std::abs(p.g_f())); }

} // namespace detail

/// Time grid used for `p` under `policy` and noise strength W.
inline TimeGrid protocol_time_grid(const QuenchProtocol& p, const StepPolicy& policy, double W = 0.0)
{
    const double kappa = policy.noise_rate_scale * W * W;
    return make_time_grid(p.t_i(), p.t_f(), max_step(detail::coupling_peak(p), kappa, policy.eta));
}

/// Evolves ground_state(g_i, q) from t_i to t_f.
inline ModeState evolve_pure(const QuenchProtocol& p, double q, const StepPolicy& policy = {},
                             IntegratorStats* stats = nullptr)
{
    policy.validate();
    ModeState psi = ground_state(p.g_i(), q);
    const auto st = propagate_pure(detail::schedule_coupling(p), protocol_time_grid(p, policy), std::span(&q, 1),
                                   std::span(&psi, 1), policy);
    if (stats) *stats = st;
    return psi;
}

/// Evolves |gs(g_i, q)><gs(g_i, q)| from t_i to t_f with dephasing strength W.
inline ModeDensity evolve_lindblad(const QuenchProtocol& p, double q, double W, const StepPolicy& policy = {},
                                   IntegratorStats* stats = nullptr)
{
    policy.validate();
    detail::require(W >= 0.0 && std::isfinite(W), "noise strength W must be non-negative");
    ModeDensity rho = ModeDensity::from_state(ground_state(p.g_i(), q));
    const double kappa = policy.noise_rate_scale * W * W;
    const auto st = propagate_lindblad(detail::schedule_coupling(p), protocol_time_grid(p, policy, W), kappa,
                                       std::span(&q, 1), std::span(&rho, 1), policy);
    if (stats) *stats = st;
    return rho;
}

struct ModeExcitation {
    double q;
    double p;
};

/// Outcome of one quench over the full momentum grid.
struct QuenchResult {
    std::optional<QuenchProtocol> protocol; ///< empty for the closed-form sudden quench
    double g_i = 0.0;
    double g_f = 0.0;
    std::size_t sites = 0;
    double W = 0.0;
    double eta = 0.0;
    std::vector<ModeExcitation> modes; ///< ascending q
    double n = 0.0;
    double total_time = 0.0;
    IntegratorStats stats{};
    bool sudden = false; ///< closed-form sudden limit was used
};

/// n = (2/N) sum_q p_q, summed in ascending q.
inline double aggregate_density(std::span<const ModeExcitation> modes, std::size_t sites)
{
    double acc = 0.0;
    for (const auto& m : modes) acc += m.p;
    return 2.0 * acc / static_cast<double>(sites);
}

/// Closed-form sudden quench g_i -> g_f: p_q = |<ex(g_f, q)|gs(g_i, q)>|^2.
inline QuenchResult sudden_quench(double g_i, double g_f, std::size_t sites)
{
    detail::require(g_i >= g_f, "sudden quench requires g_i >= g_f");
    const auto grid = mode_grid(sites);
    QuenchResult res;
    res.g_i = g_i;
    res.g_f = g_f;
    res.sites = sites;
    res.sudden = true;
    res.modes.reserve(grid.size());
    for (double q : grid.q) {
        const double p = g_i == g_f ? 0.0 : excitation_probability(ground_state(g_i, q), q, g_f);
        res.modes.push_back({q, p});
    }
    res.n = aggregate_density(res.modes, sites);
    return res;
}

/// Integrates every mode of the N-site chain and aggregates the defect density.
/// W = 0 runs the pure BdG equations, W > 0 the dephasing master equation.
/// Schedules whose window 2 theta is shorter than ten steps are evaluated with
/// the closed-form sudden quench instead.
inline QuenchResult defect_density(const QuenchProtocol& p, std::size_t sites, double W = 0.0,
                                   const StepPolicy& policy = {}, std::size_t workers = 1)
{
    policy.validate();
    detail::require(W >= 0.0 && std::isfinite(W), "noise strength W must be non-negative");
    const auto grid = mode_grid(sites);
    const double kappa = policy.noise_rate_scale * W * W;
    const double dt_max = max_step(detail::coupling_peak(p), kappa, policy.eta);

    if (p.kind() != ProtocolKind::Linear && 2.0 * p.theta() < 10.0 * dt_max) {
        auto res = sudden_quench(p.g_i(), p.g_f(), sites);
        res.protocol = p;
        res.W = W;
        res.eta = policy.eta;
        res.total_time = total_time(p);
        return res;
    }

    const TimeGrid tgrid = make_time_grid(p.t_i(), p.t_f(), dt_max);
    const std::size_t m = grid.size();
    const auto coupling = detail::schedule_coupling(p);

    // Contiguous chunks; chunk boundaries do not affect per-mode arithmetic.
    const std::size_t chunks = std::clamp<std::size_t>(workers, 1, m);
    std::vector<IntegratorStats> chunk_stats(chunks);
    std::vector<double> probs(m);
    parallel_for(chunks, workers, [&](std::size_t c) {
        const std::size_t lo = m * c / chunks;
        const std::size_t hi = m * (c + 1) / chunks;
        std::span<const double> qs(grid.q.data() + lo, hi - lo);
        try {
            if (W == 0.0) {
                std::vector<ModeState> states;
                states.reserve(qs.size());
                for (double q : qs) states.push_back(ground_state(p.g_i(), q));
                chunk_stats[c] = propagate_pure(coupling, tgrid, qs, std::span(states), policy);
                for (std::size_t j = 0; j < qs.size(); ++j)
                    probs[lo + j] = excitation_probability(states[j], qs[j], p.g_f());
            } else {
                std::vector<ModeDensity> rhos;
                rhos.reserve(qs.size());
                for (double q : qs) rhos.push_back(ModeDensity::from_state(ground_state(p.g_i(), q)));
                chunk_stats[c] = propagate_lindblad(coupling, tgrid, kappa, qs, std::span(rhos), policy);
                for (std::size_t j = 0; j < qs.size(); ++j)
                    probs[lo + j] = excitation_probability(rhos[j], qs[j], p.g_f());
            }
        } catch (const IntegrationError& e) {
            throw IntegrationError(std::string("quench ") + to_string(p.kind()) + " tau_Q = " +
                                   format_double(p.tau_q()) + ": " + e.what());
        }
    });

    QuenchResult res;
    res.protocol = p;
    res.g_i = p.g_i();
    res.g_f = p.g_f();
    res.sites = sites;
    res.W = W;
    res.eta = policy.eta;
    res.total_time = total_time(p);
    res.stats = {tgrid.steps, tgrid.dt, 0.0};
    for (const auto& s : chunk_stats) res.stats.max_norm_drift = std::max(res.stats.max_norm_drift, s.max_norm_drift);
    res.modes.reserve(m);
    for (std::size_t j = 0; j < m; ++j) res.modes.push_back({grid.q[j], probs[j]});
    res.n = aggregate_density(res.modes, sites);
    return res;
}

/// CSV with columns q, p_q.
inline void write_modes_csv(std::ostream& os, const QuenchResult& res)
{
    write_csv_row(os, {"q", "p_q"});
    for (const auto& m : res.modes) write_csv_row(os, {format_double(m.q), format_double(m.p)});
}

} // namespace oai
