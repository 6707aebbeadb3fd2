#pragma once

// Scaling laws and fits: Kibble-Zurek reference density, log-log power-law
// regression, the zeta-crossover collapse, the anti-KZ model with its optimal
// quench time, and closed-form theory exponents.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oai/error.hpp"
#include "oai/format.hpp"
#include "oai/protocols.hpp"

namespace oai {

/// n_KZ = 1 / (2 pi sqrt(2 tau_Q)) for the Ising chain.
inline double kz_reference(double tau_q)
{
    detail::require(tau_q > 0.0, "kz_reference: tau_Q must be positive");
    return 1.0 / (2.0 * std::numbers::pi * std::sqrt(2.0 * tau_q));
}

/// Sudden-quench estimate n_su = 1/2 - 1/(4 g_i).
inline double sudden_reference(double g_i)
{
    detail::require(g_i > 0.0, "sudden_reference: g_i must be positive");
    return 0.5 - 0.25 / g_i;
}

struct Point {
    double x;
    double y;
};

/// y = exp(log_prefactor) * x^exponent, fitted by OLS on (log x, log y).
struct PowerLawFit {
    double exponent = 0.0;
    double log_prefactor = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;

    [[nodiscard]] double prefactor() const { return std::exp(log_prefactor); }
    [[nodiscard]] double operator()(double x) const { return prefactor() * std::pow(x, exponent); }
};

inline PowerLawFit fit_power_law(std::span<const Point> points)
{
    if (points.size() < 3)
        throw FitError("power-law fit needs at least 3 points (got " + std::to_string(points.size()) + ")");
    const auto n = static_cast<double>(points.size());
    std::vector<double> lx, ly;
    lx.reserve(points.size());
    ly.reserve(points.size());
    for (const auto& p : points) {
        if (!(p.x > 0.0) || !(p.y > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y))
            throw FitError("power-law fit needs strictly positive finite data (got x = " + format_double(p.x) +
                           ", y = " + format_double(p.y) + ")");
        lx.push_back(std::log(p.x));
        ly.push_back(std::log(p.y));
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double dx = lx[i] - mx;
        const double dy = ly[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw FitError("power-law fit needs at least two distinct x values");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    fit.log_prefactor = my - fit.exponent * mx;
    fit.n_points = points.size();
    double ss_res = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double res = ly[i] - (fit.log_prefactor + fit.exponent * lx[i]);
        ss_res += res * res;
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

// ---------------------------------------------------------------------------
// zeta-crossover collapse: n / n_KZ - 1 = x (tau_Q^{-1/4} zeta)^{-y}

struct ZetaCollapse {
    double x = 0.0;
    double y = 0.0;
    PowerLawFit fit{};
};

/// Rows kept for the collapse fit: lo <= tau_Q^{-1/4} zeta <= hi and n/n_KZ - 1 >= min_excess.
struct CollapseWindow {
    double lo = 0.2;
    double hi = 1.0;
    double min_excess = 0.05;
};

struct ZetaRow {
    double tau_q;
    double zeta;
    double n;
};

inline double collapse_variable(double tau_q, double zeta) { return zeta / std::pow(tau_q, 0.25); }

inline ZetaCollapse fit_zeta_collapse(std::span<const ZetaRow> rows, const CollapseWindow& window = {})
{
    std::vector<Point> pts;
    for (const auto& r : rows) {
        if (!(r.tau_q > 0.0) || !(r.zeta > 0.0)) continue;
        const double s = collapse_variable(r.tau_q, r.zeta);
        const double excess = r.n / kz_reference(r.tau_q) - 1.0;
        if (s >= window.lo && s <= window.hi && excess >= window.min_excess) pts.push_back({s, excess});
    }
    if (pts.empty())
        throw FitError("zeta collapse window empty: no rows with " + format_double(window.lo) +
                       " <= tau_Q^{-1/4} zeta <= " + format_double(window.hi) + " and n/n_KZ - 1 >= " +
                       format_double(window.min_excess));
    ZetaCollapse c;
    c.fit = fit_power_law(pts);
    c.x = c.fit.prefactor();
    c.y = -c.fit.exponent;
    return c;
}

/// Piecewise defect density as a function of zeta:
///   zeta = 0                       -> n_su(g_i)
///   0 < zeta <= tau_Q^{1/4}        -> min(n_su, n_KZ (1 + x (tau_Q^{-1/4} zeta)^{-y}))
///   zeta > tau_Q^{1/4}             -> n_KZ
/// The cap at n_su keeps the crossover branch from exceeding the sudden limit as zeta -> 0.
inline double defect_model(double zeta, double tau_q, const ZetaCollapse& collapse, double g_i)
{
    detail::require(zeta >= 0.0, "defect_model: zeta must be non-negative");
    const double n_su = sudden_reference(g_i);
    if (zeta == 0.0) return n_su;
    const double n_kz = kz_reference(tau_q);
    const double s = collapse_variable(tau_q, zeta);
    if (s > 1.0) return n_kz;
    return std::min(n_su, n_kz * (1.0 + collapse.x * std::pow(s, -collapse.y)));
}

// ---------------------------------------------------------------------------
// Anti-KZ: n = a tau^{-beta} + b W^2 tau^{alpha'}

struct AkzModel {
    double a = 1.0;
    double b = 1.0;
    double beta = 0.5;
    double alpha_prime = 0.625;

    /// alpha is the adiabatic-coefficient exponent; the noise term grows with
    /// the total time, T ~ tau^{(alpha + z nu)/(1 + z nu)}.
    static AkzModel from_alpha(double a, double b, double alpha, const CriticalData& crit = CriticalData::ising())
    {
        const double znu = crit.znu();
        return {a, b, znu / (1.0 + znu), (alpha + znu) / (1.0 + znu)};
    }

    /// Linear ramp: total time proportional to tau_Q.
    static AkzModel linear(double a, double b, const CriticalData& crit = CriticalData::ising())
    {
        const double znu = crit.znu();
        return {a, b, znu / (1.0 + znu), 1.0};
    }

    [[nodiscard]] double operator()(double tau_q, double W) const
    {
        return a * std::pow(tau_q, -beta) + b * W * W * std::pow(tau_q, alpha_prime);
    }

    /// Exact minimizer over tau_Q.
    [[nodiscard]] double optimal_tau(double W) const
    {
        return std::pow(a * beta / (b * alpha_prime * W * W), 1.0 / (beta + alpha_prime));
    }

    /// tau_tilde ~ W^{-s}.
    [[nodiscard]] double s() const { return 2.0 / (beta + alpha_prime); }
};

struct OptimalTau {
    double tau_tilde = 0.0;
    double n_min = 0.0;
    std::size_t grid_index = 0; ///< index of the discrete minimum in ascending-tau order
};

/// Optimal quench time of an n(tau_Q) curve: discrete argmin (ties to the
/// smaller tau_Q) refined by the vertex of the parabola through the three
/// bracketing points in (log tau, log n).
inline OptimalTau optimal_tau(std::span<const Point> curve)
{
    if (curve.size() < 5)
        throw FitError("optimal tau needs at least 5 rows (got " + std::to_string(curve.size()) + ")");
    std::vector<Point> pts(curve.begin(), curve.end());
    for (const auto& p : pts)
        if (!(p.x > 0.0) || !(p.y > 0.0))
            throw FitError("optimal tau needs positive tau_Q and n (got tau_Q = " + format_double(p.x) +
                           ", n = " + format_double(p.y) + ")");
    std::stable_sort(pts.begin(), pts.end(), [](const Point& l, const Point& r) { return l.x < r.x; });

    std::size_t k = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].y < pts[k].y) k = i;
    if (k == 0)
        throw FitError("no interior minimum: curve is monotone increasing in tau_Q (minimum at the smallest tau_Q = " +
                       format_double(pts.front().x) + ")");
    if (k + 1 == pts.size())
        throw FitError("no interior minimum: curve is monotone decreasing in tau_Q (minimum at the largest tau_Q = " +
                       format_double(pts.back().x) + ")");

    const double x0 = std::log(pts[k - 1].x), x1 = std::log(pts[k].x), x2 = std::log(pts[k + 1].x);
    const double y0 = std::log(pts[k - 1].y), y1 = std::log(pts[k].y), y2 = std::log(pts[k + 1].y);
    const double d0 = x1 - x0, d2 = x1 - x2;
    const double num = d0 * d0 * (y1 - y2) - d2 * d2 * (y1 - y0);
    const double den = d0 * (y1 - y2) - d2 * (y1 - y0);
    OptimalTau out{pts[k].x, pts[k].y, k};
    if (den != 0.0) {
        double shift = std::clamp(-0.5 * num / den, x0 - x1, x2 - x1);
        // A vertex within roundoff of the grid point is the grid point.
        if (std::abs(shift) < 1e-9 * (x2 - x0)) shift = 0.0;
        if (shift != 0.0) {
            const double xv = x1 + shift;
            // Lagrange form of the parabola at xv.
            const double l0 = (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2));
            const double l1 = (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2));
            const double l2 = (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1));
            out.tau_tilde = pts[k].x * std::exp(shift);
            out.n_min = std::exp(l0 * y0 + l1 * y1 + l2 * y2);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Theory exponents

struct TheoryExponents {
    double s_oai;             ///< tau_tilde ~ W^{-s}, OAI with zeta ~ tau^alpha
    double s_lq;              ///< linear ramp
    double s_nloai;           ///< NLOAI at fixed zeta
    double s_nlq;             ///< power-law ramp
    double beta_kz;           ///< n ~ tau^{-beta}
    double beta_nlkz;         ///< d r nu / (1 + r z nu)
    double beta_nlkz_generic; ///< r d nu / (1 + r d nu); equal to beta_nlkz when z = d
    double T_exponent;        ///< T ~ tau^{(alpha + z nu)/(1 + z nu)}
};

inline TheoryExponents theory_exponents(double alpha, double r, const CriticalData& crit = CriticalData::ising())
{
    crit.validate();
    detail::require(alpha >= 0.0, "theory exponents: alpha must be >= 0");
    detail::require(r >= 1.0, "theory exponents: r must be >= 1");
    const double znu = crit.znu();
    const double dnu = static_cast<double>(crit.d) * crit.nu;
    TheoryExponents t{};
    // Minimizing a tau^{-d nu/(1+z nu)} + b W^2 tau^{(alpha+z nu)/(1+z nu)}.
    auto s_of = [&](double a) { return 2.0 * (1.0 + znu) / (dnu + znu + a); };
    t.s_oai = s_of(alpha);
    t.s_lq = s_of(1.0);
    t.beta_kz = znu / (1.0 + znu);
    t.beta_nlkz = dnu * r / (1.0 + r * znu);
    t.beta_nlkz_generic = r * dnu / (1.0 + r * dnu);
    t.s_nloai = 2.0 / (t.beta_nlkz + znu / (1.0 + znu));
    t.s_nlq = 2.0 / (t.beta_nlkz + 1.0);
    t.T_exponent = (alpha + znu) / (1.0 + znu);
    return t;
}

/// Total time needed to keep the defect density below epsilon_target in a
/// chain of linear size L, from tau_Q ~ L^{(1+z nu)/nu} / epsilon and
/// T ~ tau_Q^{(alpha + z nu)/(1 + z nu)}.  Prefactor set to 1: an estimate.
inline double adiabatic_time_for_size(double L, double epsilon_target, double alpha,
                                      const CriticalData& crit = CriticalData::ising())
{
    crit.validate();
    detail::require(L >= 2.0, "adiabatic time: L must be >= 2");
    detail::require(epsilon_target > 0.0 && epsilon_target < 1.0, "adiabatic time: need 0 < epsilon < 1");
    const double znu = crit.znu();
    const double tau_needed = std::pow(L, (1.0 + znu) / crit.nu) / epsilon_target;
    return std::pow(tau_needed, (alpha + znu) / (1.0 + znu));
}

// ---------------------------------------------------------------------------
// Fit reports

struct FitReport {
    std::string model;
    PowerLawFit fit{};
    double theory = 0.0;        ///< expected exponent (or y for the collapse)
    double measured = 0.0;      ///< fitted counterpart of `theory`
    std::optional<ZetaCollapse> collapse;

    [[nodiscard]] double relative_deviation() const { return std::abs(measured - theory) / std::abs(theory); }
};

inline std::vector<std::pair<std::string, std::string>> fit_report_fields(const FitReport& r)
{
    std::vector<std::pair<std::string, std::string>> kv{
        {"model", r.model},
        {"exponent", format_double(r.fit.exponent)},
        {"log_prefactor", format_double(r.fit.log_prefactor)},
        {"prefactor", format_double(r.fit.prefactor())},
        {"r_squared", format_double(r.fit.r_squared)},
        {"n_points", std::to_string(r.fit.n_points)},
        {"measured", format_double(r.measured)},
        {"theory", format_double(r.theory)},
        {"rel_deviation", format_double(r.relative_deviation())},
        {"collapse_x", r.collapse ? format_double(r.collapse->x) : ""},
        {"collapse_y", r.collapse ? format_double(r.collapse->y) : ""},
    };
    return kv;
}

/// `key = value` lines.
inline void write_fit_report_text(std::ostream& os, const FitReport& r)
{
    for (const auto& [k, v] : fit_report_fields(r)) os << k << " = " << v << '\n';
}

/// Header plus one row.
inline void write_fit_report_csv(std::ostream& os, const FitReport& r)
{
    std::vector<std::string> keys, vals;
    for (auto& [k, v] : fit_report_fields(r)) {
        keys.push_back(k);
        vals.push_back(v);
    }
    write_csv_row(os, keys);
    write_csv_row(os, vals);
}

} // namespace oai
