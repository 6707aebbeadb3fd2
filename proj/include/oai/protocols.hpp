#pragma once

// Closed-form quench schedules: linear (LQ) and its power-law variant (NLQ),
// the optimized adiabatic-impulse schedule (OAI) and its nonlinear
// generalization (NLOAI).
//
// Every schedule is expressed through the dimensionless distance from the
// critical point, eps(t) = (g(t) - g_c) / g_c, which decreases strictly from
// eps_i > 0 at t_i to eps_f < 0 at t_f and vanishes at t = 0.
//
// OAI away from criticality follows the adiabatic-breakdown threshold
// |eps/eps_dot| = zeta |eps|^{-z nu}; the branch solution
//
//     eps_1(t) = +((zeta/a) / (theta + t))^{1/a}      t < 0
//     eps_1(t) = -((zeta/a) / (theta - t))^{1/a}      t >= 0      (a = z nu)
//
// is shifted by eps_1(0) so the crossing is linear with slope -1/tau_Q, which
// fixes theta = (1/a) (zeta^{1/a} tau_Q)^{a/(1+a)}.  NLOAI raises the shifted
// OAI distance to the power r, preserving the sign.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "oai/error.hpp"
#include "oai/format.hpp"

namespace oai {

/// Universality data of the critical point being crossed.
struct CriticalData {
    double z = 1.0;
    double nu = 1.0;
    int d = 1;
    double g_c = 1.0;

    [[nodiscard]] double znu() const noexcept { return z * nu; }

    /// Transverse-field Ising chain: z = nu = d = 1, g_c = 1.
    static constexpr CriticalData ising() noexcept { return {}; }

    void validate() const
    {
        detail::require(z > 0.0 && std::isfinite(z), "critical data: z must be positive");
        detail::require(nu > 0.0 && std::isfinite(nu), "critical data: nu must be positive");
        detail::require(d >= 1, "critical data: d must be a positive integer");
        detail::require(g_c > 0.0 && std::isfinite(g_c), "critical data: g_c must be positive");
    }
};

enum class ProtocolKind { Linear, OAI, NLOAI };

inline std::string to_string(ProtocolKind k)
{
    switch (k) {
    case ProtocolKind::Linear: return "linear";
    case ProtocolKind::OAI: return "oai";
    case ProtocolKind::NLOAI: return "nloai";
    }
    return "?";
}

/// How strictly the adiabatic coefficient is checked against tau_Q.
///  - Kz: zeta >= tau_Q is rejected (the shifted crossing would no longer be small).
///  - Relaxed: any zeta > 0 is accepted; used for the zeta -> infinity (LQ) limit.
enum class ZetaRegime { Kz, Relaxed };

/// zeta = c * tau_Q^alpha.  alpha = 0 is the fixed-zeta mode.
struct AlphaPolicy {
    double alpha = 0.25;
    double c = 1.0;

    [[nodiscard]] double zeta(double tau_q) const { return c * std::pow(tau_q, alpha); }

    /// alpha in [1/4, 1): the window in which the Ising chain keeps KZ scaling.
    [[nodiscard]] bool kz_faithful() const noexcept { return alpha >= 0.25 && alpha < 1.0; }

    void validate() const
    {
        detail::require(alpha >= 0.0 && std::isfinite(alpha), "alpha policy: alpha must be >= 0");
        detail::require(c > 0.0 && std::isfinite(c), "alpha policy: prefactor must be positive");
    }
};

/// Above this value of |eps_1(0)| = (zeta/tau_Q)^{1/(1+z nu)} a warning is attached.
inline constexpr double kCrossingOffsetWarning = 0.1;

/// Pair of adiabatic-impulse timescales at one instant.
struct Timescales {
    double drive; ///< |eps / eps_dot|
    double relax; ///< |eps|^{-z nu}; +inf at the crossing
};

/// Immutable quench schedule.  Construct through make_linear, make_nlq,
/// make_oai or make_nloai.
class QuenchProtocol {
public:
    [[nodiscard]] ProtocolKind kind() const noexcept { return kind_; }
    [[nodiscard]] double tau_q() const noexcept { return tau_q_; }
    /// Adiabatic coefficient; empty for linear ramps.
    [[nodiscard]] std::optional<double> zeta() const noexcept
    {
        if (kind_ == ProtocolKind::Linear) return std::nullopt;
        return zeta_;
    }
    [[nodiscard]] double r() const noexcept { return r_; }
    [[nodiscard]] double g_i() const noexcept { return g_i_; }
    [[nodiscard]] double g_f() const noexcept { return g_f_; }
    /// Window half-width; +inf for linear ramps.
    [[nodiscard]] double theta() const noexcept { return theta_; }
    [[nodiscard]] double t_i() const noexcept { return t_i_; }
    [[nodiscard]] double t_f() const noexcept { return t_f_; }
    [[nodiscard]] const CriticalData& crit() const noexcept { return crit_; }
    [[nodiscard]] double eps_i() const noexcept { return (g_i_ - crit_.g_c) / crit_.g_c; }
    [[nodiscard]] double eps_f() const noexcept { return (g_f_ - crit_.g_c) / crit_.g_c; }

    /// |eps_1(0)|, the shift applied to the threshold branch; 0 for linear ramps.
    [[nodiscard]] double crossing_offset() const noexcept { return offset_; }

    /// Set when the crossing offset exceeds kCrossingOffsetWarning.
    [[nodiscard]] std::optional<std::string> regime_warning() const
    {
        if (kind_ == ProtocolKind::Linear || offset_ <= kCrossingOffsetWarning) return std::nullopt;
        return "zeta/tau_Q is not small: crossing offset (zeta/tau_Q)^{1/(1+z nu)} = " + format_double(offset_) +
               " exceeds " + format_double(kCrossingOffsetWarning);
    }

    [[nodiscard]] bool in_window(double t) const noexcept { return t >= t_i_ && t <= t_f_; }

    // Unchecked evaluation; callers guarantee t in [t_i, t_f].
    [[nodiscard]] double epsilon_at(double t) const noexcept
    {
        if (kind_ == ProtocolKind::Linear) {
            const double x = t / tau_q_;
            if (r_ == 1.0) return -x;
            return -std::copysign(std::pow(std::abs(x), r_), x);
        }
        const double e = shifted_branch(t);
        if (r_ == 1.0) return e;
        return std::copysign(std::pow(std::abs(e), r_), e);
    }

    [[nodiscard]] double coupling_at(double t) const noexcept { return crit_.g_c * (1.0 + epsilon_at(t)); }

    [[nodiscard]] double epsilon_dot_at(double t) const noexcept
    {
        if (kind_ == ProtocolKind::Linear) {
            if (r_ == 1.0) return -1.0 / tau_q_;
            return -(r_ / tau_q_) * std::pow(std::abs(t / tau_q_), r_ - 1.0);
        }
        const double de = branch_derivative(t);
        if (r_ == 1.0) return de;
        return r_ * std::pow(std::abs(shifted_branch(t)), r_ - 1.0) * de;
    }

    /// Unshifted threshold branch eps_1(t); only for OAI/NLOAI.
    [[nodiscard]] double auxiliary_at(double t) const noexcept
    {
        return t < 0.0 ? branch_power(theta_ + t) : -branch_power(theta_ - t);
    }

    [[nodiscard]] double auxiliary_dot_at(double t) const noexcept { return branch_derivative(t); }

private:
    friend QuenchProtocol make_nlq(double, double, double, double, const CriticalData&);
    friend QuenchProtocol make_nloai(double, double, double, double, double, const CriticalData&, ZetaRegime);
    friend QuenchProtocol make_oai(double, double, double, double, const CriticalData&, ZetaRegime);

    QuenchProtocol() = default;

    // ((zeta/a) / s)^{1/a}
    [[nodiscard]] double branch_power(double s) const noexcept
    {
        const double base = scale_ / s;
        return unit_exponent_ ? base : std::pow(base, 1.0 / a_);
    }

    [[nodiscard]] double shifted_branch(double t) const noexcept
    {
        return t < 0.0 ? branch_power(theta_ + t) - offset_ : -branch_power(theta_ - t) + offset_;
    }

    // d/dt of the branch; identical for shifted and unshifted forms.
    [[nodiscard]] double branch_derivative(double t) const noexcept
    {
        const double s = t < 0.0 ? theta_ + t : theta_ - t;
        return -branch_power(s) / (a_ * s);
    }

    ProtocolKind kind_ = ProtocolKind::Linear;
    double tau_q_ = 1.0;
    double zeta_ = std::numeric_limits<double>::infinity();
    double r_ = 1.0;
    double g_i_ = 2.0;
    double g_f_ = 0.0;
    double theta_ = std::numeric_limits<double>::infinity();
    double t_i_ = -1.0;
    double t_f_ = 1.0;
    CriticalData crit_{};
    double a_ = 1.0;     // z nu
    double scale_ = 0.0; // zeta / (z nu)
    double offset_ = 0.0;
    bool unit_exponent_ = true;
};

namespace detail {

inline void check_couplings(double g_i, double g_f, const CriticalData& crit)
{
    crit.validate();
    require(std::isfinite(g_i) && std::isfinite(g_f), "couplings must be finite");
    require(g_i > g_f, "non-monotone window: need g_i > g_f (got g_i = " + format_double(g_i) +
                           ", g_f = " + format_double(g_f) + ")");
    require(g_i > crit.g_c && g_f < crit.g_c,
            "window must cross the critical point: need g_f < g_c < g_i (g_c = " + format_double(crit.g_c) + ")");
    require(g_f >= 0.0, "final coupling must satisfy g_f >= 0");
}

inline void check_tau(double tau_q)
{
    require(tau_q > 0.0 && std::isfinite(tau_q), "quench time tau_Q must be positive and finite");
}

inline void check_r(double r)
{
    require(r >= 1.0 && std::isfinite(r), "nonlinearity exponent r must satisfy r >= 1");
}

} // namespace detail

/// Power-law ramp eps(t) = -sgn(t) |t/tau_Q|^r crossing g_c at t = 0 (NLQ; r = 1 is LQ).
inline QuenchProtocol make_nlq(double tau_q, double r, double g_i, double g_f,
                               const CriticalData& crit = CriticalData::ising())
{
    detail::check_tau(tau_q);
    detail::check_r(r);
    detail::check_couplings(g_i, g_f, crit);
    QuenchProtocol p;
    p.kind_ = ProtocolKind::Linear;
    p.tau_q_ = tau_q;
    p.r_ = r;
    p.g_i_ = g_i;
    p.g_f_ = g_f;
    p.crit_ = crit;
    p.a_ = crit.znu();
    const double ei = p.eps_i();
    const double ef = -p.eps_f();
    p.t_i_ = r == 1.0 ? -ei * tau_q : -std::pow(ei, 1.0 / r) * tau_q;
    p.t_f_ = r == 1.0 ? ef * tau_q : std::pow(ef, 1.0 / r) * tau_q;
    return p;
}

/// Linear ramp eps(t) = -t/tau_Q.
inline QuenchProtocol make_linear(double tau_q, double g_i, double g_f,
                                  const CriticalData& crit = CriticalData::ising())
{
    return make_nlq(tau_q, 1.0, g_i, g_f, crit);
}

/// NLOAI schedule.  r = 1 reproduces make_oai exactly.
inline QuenchProtocol make_nloai(double tau_q, double zeta, double r, double g_i, double g_f,
                                 const CriticalData& crit = CriticalData::ising(),
                                 ZetaRegime regime = ZetaRegime::Kz)
{
    detail::check_tau(tau_q);
    detail::check_r(r);
    detail::check_couplings(g_i, g_f, crit);
    detail::require(zeta > 0.0 && std::isfinite(zeta), "adiabatic coefficient zeta must be positive and finite");
    if (regime == ZetaRegime::Kz)
        detail::require(zeta < tau_q, "zeta = " + format_double(zeta) + " >= tau_Q = " + format_double(tau_q) +
                                          ": the crossing offset is not small (need zeta << tau_Q)");

    QuenchProtocol p;
    p.kind_ = ProtocolKind::NLOAI;
    p.tau_q_ = tau_q;
    p.zeta_ = zeta;
    p.r_ = r;
    p.g_i_ = g_i;
    p.g_f_ = g_f;
    p.crit_ = crit;
    const double a = crit.znu();
    p.a_ = a;
    p.unit_exponent_ = a == 1.0;
    p.scale_ = zeta / a;
    p.theta_ = p.unit_exponent_ ? std::sqrt(zeta * tau_q) : std::pow(std::pow(zeta, 1.0 / a) * tau_q, a / (1.0 + a)) / a;
    p.offset_ = p.branch_power(p.theta_);

    // Endpoints from eps_1(t) -/+ offset = +/- |eps|^{1/r}.
    const double ei = r == 1.0 ? p.eps_i() : std::pow(p.eps_i(), 1.0 / r);
    const double ef = r == 1.0 ? -p.eps_f() : std::pow(-p.eps_f(), 1.0 / r);
    const double si = p.unit_exponent_ ? ei + p.offset_ : std::pow(ei + p.offset_, a);
    const double sf = p.unit_exponent_ ? ef + p.offset_ : std::pow(ef + p.offset_, a);
    p.t_i_ = p.scale_ / si - p.theta_;
    p.t_f_ = p.theta_ - p.scale_ / sf;
    detail::require(p.t_i_ >= -p.theta_ && p.t_i_ < 0.0 && p.t_f_ > 0.0 && p.t_f_ <= p.theta_,
                    "schedule endpoints fall outside (-theta, theta)");
    return p;
}

/// OAI schedule.
inline QuenchProtocol make_oai(double tau_q, double zeta, double g_i, double g_f,
                               const CriticalData& crit = CriticalData::ising(),
                               ZetaRegime regime = ZetaRegime::Kz)
{
    QuenchProtocol p = make_nloai(tau_q, zeta, 1.0, g_i, g_f, crit, regime);
    p.kind_ = ProtocolKind::OAI;
    return p;
}

namespace detail {

inline void check_window(const QuenchProtocol& p, double t)
{
    if (!p.in_window(t))
        throw DomainError("t = " + format_double(t) + " outside schedule window [" + format_double(p.t_i()) + ", " +
                          format_double(p.t_f()) + "]");
}

} // namespace detail

/// eps(t) = (g(t) - g_c) / g_c.
inline double epsilon(const QuenchProtocol& p, double t)
{
    detail::check_window(p, t);
    return p.epsilon_at(t);
}

inline double g_of_t(const QuenchProtocol& p, double t)
{
    detail::check_window(p, t);
    return p.coupling_at(t);
}

inline double epsilon_dot(const QuenchProtocol& p, double t)
{
    detail::check_window(p, t);
    return p.epsilon_dot_at(t);
}

/// Drive and relaxation timescales.  With `auxiliary` set, the unshifted
/// threshold branch eps_1 is used instead of eps, for which
/// drive = zeta * relax holds identically.  At t = 0 on the full schedule the
/// relaxation time is +inf and the drive timescale is 0.
inline Timescales timescales(const QuenchProtocol& p, double t, bool auxiliary = false)
{
    detail::check_window(p, t);
    const double a = p.crit().znu();
    if (auxiliary) {
        detail::require(p.kind() != ProtocolKind::Linear, "auxiliary branch is defined only for OAI/NLOAI schedules");
        const double e1 = p.auxiliary_at(t);
        const double de1 = p.auxiliary_dot_at(t);
        return {std::abs(e1 / de1), std::pow(std::abs(e1), -a)};
    }
    if (t == 0.0) return {0.0, std::numeric_limits<double>::infinity()};
    const double e = p.epsilon_at(t);
    const double de = p.epsilon_dot_at(t);
    return {std::abs(e / de), std::pow(std::abs(e), -a)};
}

inline double total_time(const QuenchProtocol& p) noexcept { return p.t_f() - p.t_i(); }

/// 2 theta; +inf for linear ramps.
inline double time_bound(const QuenchProtocol& p) noexcept { return 2.0 * p.theta(); }

/// Sample times spanning [t_i, t_f] with t = 0 included exactly.
inline std::vector<double> schedule_samples(const QuenchProtocol& p, std::size_t count)
{
    detail::require(count >= 3, "schedule sample count must be >= 3");
    const double ti = p.t_i();
    const double tf = p.t_f();
    const double span = tf - ti;
    auto n_neg = static_cast<std::size_t>(std::llround(static_cast<double>(count - 1) * (-ti) / span));
    n_neg = std::clamp<std::size_t>(n_neg, 1, count - 2);
    const std::size_t n_pos = count - 1 - n_neg;
    std::vector<double> ts;
    ts.reserve(count);
    for (std::size_t k = 0; k < n_neg; ++k)
        ts.push_back(ti + (-ti) * static_cast<double>(k) / static_cast<double>(n_neg));
    ts.push_back(0.0);
    for (std::size_t k = 1; k < n_pos; ++k)
        ts.push_back(tf * static_cast<double>(k) / static_cast<double>(n_pos));
    ts.push_back(tf);
    return ts;
}

/// CSV dump: t, epsilon, g, drive_timescale, relax_timescale.
inline void write_schedule_csv(std::ostream& os, const QuenchProtocol& p, std::size_t samples = 2000)
{
    write_csv_row(os, {"t", "epsilon", "g", "drive_timescale", "relax_timescale"});
    for (double t : schedule_samples(p, samples)) {
        const auto ts = timescales(p, t);
        write_csv_row(os, {format_double(t), format_double(p.epsilon_at(t)), format_double(p.coupling_at(t)),
                           format_double(ts.drive), format_double(ts.relax)});
    }
}

} // namespace oai
