#pragma once

// Run configuration: an INI-style file with [protocol], [sweep], [run] and
// [fit] sections, overridable key by key from the command line.
//
//   [protocol]
//   kind = oai                ; linear | oai | nloai
//   g_i = 2                   ; list allowed: 1.5, 2, 3, 5
//   g_f = 0
//   r = 1                     ; list allowed (nloai, or power-law linear ramps)
//   zeta_mode = fixed         ; fixed | power_law
//   zeta = 32                 ; list allowed in fixed mode
//   alpha = 0.25              ; power_law: zeta = zeta_prefactor * tau_Q^alpha
//   zeta_prefactor = 1
//   zeta_regime = kz          ; kz | relaxed
//
//   [sweep]
//   tau_q = 50, 100, 200      ; explicit list, or a log range (default 50 to 3200):
//   tau_q_min = 50
//   tau_q_max = 3200
//   tau_q_per_decade = 6
//   w = 0                     ; list of noise strengths
//                             ; noise-sweep defaults: w = 0.004 ... 0.02 and,
//                             ; for linear ramps, tau_Q from 100 to 20000
//
//   [run]
//   modes = 2000   eta = 0.02   workers = 1   out = out
//   noise_rate_scale = 1   check_every = 100   samples = 2000   write_modes = true
//
//   [fit]
//   model = kz                ; kz | nlkz | zeta_collapse | akz_optimal
//   input = out/runs.csv

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oai/dynamics.hpp"
#include "oai/error.hpp"
#include "oai/format.hpp"
#include "oai/protocols.hpp"

namespace oai::run {

/// Invalid or inconsistent configuration.
class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

enum class ZetaMode { Fixed, PowerLaw };

/// key -> raw value, keyed as "section.key".
using Settings = std::map<std::string, std::string>;

struct RunConfig {
    ProtocolKind kind = ProtocolKind::OAI;
    std::vector<double> g_i{2.0};
    double g_f = 0.0;
    std::vector<double> r{1.0};
    ZetaMode zeta_mode = ZetaMode::Fixed;
    std::vector<double> zeta{32.0};
    AlphaPolicy alpha_law{0.25, 1.0};
    ZetaRegime regime = ZetaRegime::Kz;

    std::vector<double> tau_q;
    std::vector<double> w{0.0};
    bool tau_default = false; ///< tau_q came from the built-in grid
    bool w_default = false;   ///< w came from the built-in value

    std::size_t modes = 2000;
    StepPolicy step{};
    std::size_t workers = 1;
    std::string out = "out";
    std::size_t samples = 2000;
    bool write_modes = true;

    std::string fit_model = "kz";
    std::string fit_input;

    /// Resolved settings in canonical form, used for the manifest.
    Settings resolved;
};

namespace detail {

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double to_number(const std::string& key, const std::string& raw)
{
    const auto v = parse_double(raw);
    if (!v) throw ConfigError("config: " + key + " = '" + raw + "' is not a number");
    return *v;
}

inline std::vector<double> to_list(const std::string& key, const std::string& raw)
{
    std::vector<double> out;
    if (trim(raw).empty()) return out;
    for (const auto& f : split_csv_line(raw)) out.push_back(to_number(key, f));
    return out;
}

inline std::size_t to_count(const std::string& key, const std::string& raw)
{
    const double v = to_number(key, raw);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e12) throw ConfigError("config: " + key + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

inline bool to_bool(const std::string& key, const std::string& raw)
{
    const auto s = trim(raw);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("config: " + key + " = '" + raw + "' is not a boolean");
}

inline std::string join(const std::vector<double>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ", ";
        s += format_double(xs[i]);
    }
    return s;
}

} // namespace detail

inline Settings parse_settings(std::istream& in)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    Settings s;
    for (const auto& [section, node] : tree) {
        if (node.empty()) throw ConfigError("config: key '" + section + "' must live in a section");
        for (const auto& [key, leaf] : node) {
            // Strip trailing `;` comments.
            std::string v = leaf.get_value<std::string>();
            if (auto pos = v.find(';'); pos != std::string::npos) v = v.substr(0, pos);
            s[section + "." + key] = detail::trim(v);
        }
    }
    return s;
}

/// Applies `section.key=value` overrides; later entries win.
inline void apply_overrides(Settings& s, const std::vector<std::string>& overrides)
{
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || o.find('.') > eq)
            throw ConfigError("config override '" + o + "' must look like section.key=value");
        s[detail::trim(o.substr(0, eq))] = detail::trim(o.substr(eq + 1));
    }
}

/// lo, lo * 10^{1/ppd}, ... up to and including hi.
inline std::vector<double> log_range(double lo, double hi, double ppd)
{
    std::vector<double> out;
    const auto steps = static_cast<std::size_t>(std::ceil(std::log10(hi / lo) * ppd - 1e-9));
    for (std::size_t k = 0; k <= steps; ++k)
        out.push_back(k == steps ? hi : lo * std::pow(10.0, static_cast<double>(k) / ppd));
    return out;
}

/// Builds and validates a RunConfig.  Unknown keys are rejected.
inline RunConfig build_config(const Settings& settings)
{
    static const char* const known[] = {
        "protocol.kind", "protocol.g_i", "protocol.g_f", "protocol.r", "protocol.zeta_mode", "protocol.zeta",
        "protocol.alpha", "protocol.zeta_prefactor", "protocol.zeta_regime", "sweep.tau_q", "sweep.tau_q_min",
        "sweep.tau_q_max", "sweep.tau_q_per_decade", "sweep.w", "run.modes", "run.eta", "run.workers", "run.out",
        "run.noise_rate_scale", "run.check_every", "run.samples", "run.write_modes", "fit.model", "fit.input"};
    for (const auto& [k, v] : settings) {
        bool ok = false;
        for (const char* kn : known) ok = ok || k == kn;
        if (!ok) throw ConfigError("config: unknown key '" + k + "'");
    }
    auto has = [&](const std::string& k) { return settings.count(k) > 0; };
    auto get = [&](const std::string& k) { return settings.at(k); };

    RunConfig c;
    if (has("protocol.kind")) {
        const auto k = get("protocol.kind");
        if (k == "linear" || k == "lq" || k == "nlq") c.kind = ProtocolKind::Linear;
        else if (k == "oai") c.kind = ProtocolKind::OAI;
        else if (k == "nloai") c.kind = ProtocolKind::NLOAI;
        else throw ConfigError("config: protocol.kind must be linear, oai or nloai (got '" + k + "')");
    }
    if (has("protocol.g_i")) c.g_i = detail::to_list("protocol.g_i", get("protocol.g_i"));
    if (has("protocol.g_f")) c.g_f = detail::to_number("protocol.g_f", get("protocol.g_f"));
    if (has("protocol.r")) c.r = detail::to_list("protocol.r", get("protocol.r"));
    if (has("protocol.zeta_mode")) {
        const auto m = get("protocol.zeta_mode");
        if (m == "fixed") c.zeta_mode = ZetaMode::Fixed;
        else if (m == "power_law") c.zeta_mode = ZetaMode::PowerLaw;
        else throw ConfigError("config: protocol.zeta_mode must be fixed or power_law (got '" + m + "')");
    }
    if (has("protocol.zeta")) c.zeta = detail::to_list("protocol.zeta", get("protocol.zeta"));
    if (has("protocol.alpha")) c.alpha_law.alpha = detail::to_number("protocol.alpha", get("protocol.alpha"));
    if (has("protocol.zeta_prefactor"))
        c.alpha_law.c = detail::to_number("protocol.zeta_prefactor", get("protocol.zeta_prefactor"));
    if (has("protocol.zeta_regime")) {
        const auto m = get("protocol.zeta_regime");
        if (m == "kz") c.regime = ZetaRegime::Kz;
        else if (m == "relaxed") c.regime = ZetaRegime::Relaxed;
        else throw ConfigError("config: protocol.zeta_regime must be kz or relaxed (got '" + m + "')");
    }

    const bool explicit_tau = has("sweep.tau_q");
    const bool ranged_tau = has("sweep.tau_q_min") || has("sweep.tau_q_max") || has("sweep.tau_q_per_decade");
    if (explicit_tau && ranged_tau) throw ConfigError("config: give either sweep.tau_q or a tau_q_min/max range, not both");
    if (explicit_tau) {
        c.tau_q = detail::to_list("sweep.tau_q", get("sweep.tau_q"));
    } else if (ranged_tau) {
        if (!has("sweep.tau_q_min") || !has("sweep.tau_q_max"))
            throw ConfigError("config: a tau_Q range needs both sweep.tau_q_min and sweep.tau_q_max");
        const double lo = detail::to_number("sweep.tau_q_min", get("sweep.tau_q_min"));
        const double hi = detail::to_number("sweep.tau_q_max", get("sweep.tau_q_max"));
        const double ppd =
            has("sweep.tau_q_per_decade") ? detail::to_number("sweep.tau_q_per_decade", get("sweep.tau_q_per_decade")) : 6.0;
        if (!(lo > 0.0) || !(hi > lo)) throw ConfigError("config: tau_Q range needs 0 < tau_q_min < tau_q_max");
        if (!(ppd >= 2.0)) throw ConfigError("config: log ranges need at least 2 points per decade");
        c.tau_q = log_range(lo, hi, ppd);
    } else {
        c.tau_q = log_range(50, 3200, 6);
        c.tau_default = true;
    }
    if (has("sweep.w")) c.w = detail::to_list("sweep.w", get("sweep.w"));
    else c.w_default = true;

    if (has("run.modes")) c.modes = detail::to_count("run.modes", get("run.modes"));
    if (has("run.eta")) c.step.eta = detail::to_number("run.eta", get("run.eta"));
    if (has("run.workers")) c.workers = detail::to_count("run.workers", get("run.workers"));
    if (has("run.out")) c.out = get("run.out");
    if (has("run.noise_rate_scale"))
        c.step.noise_rate_scale = detail::to_number("run.noise_rate_scale", get("run.noise_rate_scale"));
    if (has("run.check_every")) c.step.check_every = detail::to_count("run.check_every", get("run.check_every"));
    if (has("run.samples")) c.samples = detail::to_count("run.samples", get("run.samples"));
    if (has("run.write_modes")) c.write_modes = detail::to_bool("run.write_modes", get("run.write_modes"));
    if (has("fit.model")) c.fit_model = get("fit.model");
    if (has("fit.input")) c.fit_input = get("fit.input");

    c.resolved = {
        {"protocol.kind", to_string(c.kind)},
        {"protocol.g_i", detail::join(c.g_i)},
        {"protocol.g_f", format_double(c.g_f)},
        {"protocol.r", detail::join(c.r)},
        {"protocol.zeta_mode", c.zeta_mode == ZetaMode::Fixed ? "fixed" : "power_law"},
        {"protocol.zeta", detail::join(c.zeta)},
        {"protocol.alpha", format_double(c.alpha_law.alpha)},
        {"protocol.zeta_prefactor", format_double(c.alpha_law.c)},
        {"protocol.zeta_regime", c.regime == ZetaRegime::Kz ? "kz" : "relaxed"},
        {"sweep.tau_q", detail::join(c.tau_q)},
        {"sweep.w", detail::join(c.w)},
        {"run.modes", std::to_string(c.modes)},
        {"run.eta", format_double(c.step.eta)},
        {"run.workers", std::to_string(c.workers)},
        {"run.out", c.out},
        {"run.noise_rate_scale", format_double(c.step.noise_rate_scale)},
        {"run.check_every", std::to_string(c.step.check_every)},
        {"run.samples", std::to_string(c.samples)},
        {"run.write_modes", c.write_modes ? "true" : "false"},
        {"fit.model", c.fit_model},
        {"fit.input", c.fit_input},
    };
    return c;
}

/// Checks every module precondition that can be checked before running.
/// `needs_tau` is false for commands that do not integrate (fit).
inline void validate(const RunConfig& c, bool needs_tau = true)
{
    auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (needs_tau) {
        if (c.tau_q.empty()) fail("tau_Q grid is empty");
        for (double t : c.tau_q)
            if (!(t > 0.0) || !std::isfinite(t)) fail("tau_Q values must be positive (got " + format_double(t) + ")");
        if (c.g_i.empty()) fail("protocol.g_i is empty");
        if (c.r.empty()) fail("protocol.r is empty");
        if (c.w.empty()) fail("sweep.w is empty");
        for (double w : c.w)
            if (!(w >= 0.0) || !std::isfinite(w)) fail("noise strengths must be >= 0 (got " + format_double(w) + ")");
        for (double r : c.r)
            if (!(r >= 1.0)) fail("r must be >= 1 (got " + format_double(r) + ")");
        if (c.kind == ProtocolKind::OAI)
            for (double r : c.r)
                if (r != 1.0) fail("oai protocol requires r = 1; use kind = nloai");
        if (c.kind != ProtocolKind::Linear) {
            if (c.zeta_mode == ZetaMode::Fixed) {
                if (c.zeta.empty()) fail("protocol.zeta is empty");
                for (double z : c.zeta)
                    if (!(z > 0.0)) fail("zeta values must be positive (got " + format_double(z) + ")");
            } else {
                c.alpha_law.validate();
            }
        }
        if (c.modes < 4 || c.modes % 2) fail("run.modes must be an even site count >= 4");
        c.step.validate();
        // Construct every protocol once so schedule errors surface before any run.
        for (double gi : c.g_i)
            for (double r : c.r)
                for (double tau : c.tau_q) {
                    if (c.kind == ProtocolKind::Linear) {
                        (void)make_nlq(tau, r, gi, c.g_f);
                    } else if (c.zeta_mode == ZetaMode::PowerLaw) {
                        (void)make_nloai(tau, c.alpha_law.zeta(tau), r, gi, c.g_f, CriticalData::ising(), c.regime);
                    } else {
                        for (double z : c.zeta) (void)make_nloai(tau, z, r, gi, c.g_f, CriticalData::ising(), c.regime);
                    }
                }
    }
    if (c.workers < 1) fail("run.workers must be >= 1");
    if (c.samples < 3) fail("run.samples must be >= 3");
}

/// Serializes resolved settings back to INI text.
inline std::string to_ini(const Settings& s)
{
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
    for (const auto& [k, v] : s) {
        const auto dot = k.find('.');
        sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
    }
    std::ostringstream os;
    for (const auto& [sec, kvs] : sections) {
        os << '[' << sec << "]\n";
        for (const auto& [k, v] : kvs) os << k << " = " << v << '\n';
        os << '\n';
    }
    return os.str();
}

} // namespace oai::run
