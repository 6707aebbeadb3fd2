#pragma once

// Subcommand implementations shared by the oaiq tool and the tests.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oai/dynamics.hpp"
#include "oai/parallel.hpp"
#include "oai/protocols.hpp"
#include "oai/run/config.hpp"
#include "oai/run/manifest.hpp"
#include "oai/scaling.hpp"

namespace oai::run {

/// Reference value of the collapse exponent y quoted with the crossover fit.
inline constexpr double kReferenceCollapseExponent = 1.732;

/// One point of a sweep.  zeta is NaN for linear ramps; alpha is NaN unless
/// zeta follows a power law in tau_Q.
struct RunItem {
    ProtocolKind kind = ProtocolKind::OAI;
    double tau_q = 0.0;
    double zeta = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double r = 1.0;
    double W = 0.0;
    double g_i = 2.0;
    double g_f = 0.0;
};

struct RunRow {
    RunItem item;
    std::size_t sites = 0;
    double total_time = std::numeric_limits<double>::quiet_NaN();
    double n = std::numeric_limits<double>::quiet_NaN();
    double eta = 0.0;
    std::string status = "ok";

    [[nodiscard]] bool ok() const { return status == "ok"; }
};

inline const std::vector<std::string>& runs_header()
{
    static const std::vector<std::string> h{"protocol", "tau_Q", "zeta", "alpha", "r", "W", "N",
                                            "g_i", "g_f", "T_total", "n", "dt_eta", "status"};
    return h;
}

inline const std::vector<std::string>& optimal_header()
{
    static const std::vector<std::string> h{"W", "tau_tilde", "n_min", "protocol", "alpha", "r", "status"};
    return h;
}

/// Sweep order: g_i, r, zeta, W, then tau_Q innermost.
inline std::vector<RunItem> expand(const RunConfig& c)
{
    std::vector<RunItem> items;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> zetas{nan};
    if (c.kind != ProtocolKind::Linear && c.zeta_mode == ZetaMode::Fixed) zetas = c.zeta;
    for (double gi : c.g_i)
        for (double r : c.r)
            for (double z : zetas)
                for (double w : c.w)
                    for (double tau : c.tau_q) {
                        RunItem it;
                        it.kind = c.kind;
                        it.tau_q = tau;
                        it.r = r;
                        it.W = w;
                        it.g_i = gi;
                        it.g_f = c.g_f;
                        if (c.kind != ProtocolKind::Linear) {
                            if (c.zeta_mode == ZetaMode::PowerLaw) {
                                it.alpha = c.alpha_law.alpha;
                                it.zeta = c.alpha_law.zeta(tau);
                            } else {
                                it.zeta = z;
                            }
                        }
                        items.push_back(it);
                    }
    return items;
}

inline QuenchProtocol build_protocol(const RunItem& it, ZetaRegime regime)
{
    if (it.kind == ProtocolKind::Linear) return make_nlq(it.tau_q, it.r, it.g_i, it.g_f);
    if (it.kind == ProtocolKind::OAI) return make_oai(it.tau_q, it.zeta, it.g_i, it.g_f, CriticalData::ising(), regime);
    return make_nloai(it.tau_q, it.zeta, it.r, it.g_i, it.g_f, CriticalData::ising(), regime);
}

namespace detail {

inline std::string field(double x) { return std::isnan(x) ? std::string() : format_double(x); }

/// Keeps free-text messages on one CSV field.
inline std::string sanitize(std::string s)
{
    for (auto& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    return s;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

struct Executed {
    std::vector<RunRow> rows;
    std::vector<std::optional<QuenchResult>> results; ///< per row; empty on failure
    std::vector<double> seconds;
};

/// Runs every item on a work queue.  Each item is computed independently and
/// stored in its own slot, so the output does not depend on `workers`.
inline Executed execute(const RunConfig& c, const std::vector<RunItem>& items, bool keep_results)
{
    Executed ex;
    ex.rows.resize(items.size());
    ex.results.resize(items.size());
    ex.seconds.resize(items.size());
    const std::size_t inner = std::max<std::size_t>(1, c.workers / std::max<std::size_t>(1, items.size()));
    parallel_for(items.size(), c.workers, [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        RunRow row;
        row.item = items[i];
        row.sites = c.modes;
        row.eta = c.step.eta;
        try {
            const auto p = build_protocol(items[i], c.regime);
            row.total_time = total_time(p);
            auto res = defect_density(p, c.modes, items[i].W, c.step, inner);
            row.n = res.n;
            if (keep_results) ex.results[i] = std::move(res);
        } catch (const Error& e) {
            row.status = "failed: " + detail::sanitize(e.what());
        }
        ex.rows[i] = std::move(row);
        ex.seconds[i] = detail::seconds_since(t0);
    });
    return ex;
}

inline void write_runs_csv(std::ostream& os, const std::vector<RunRow>& rows)
{
    write_csv_row(os, runs_header());
    for (const auto& r : rows) {
        const auto& it = r.item;
        write_csv_row(os, {to_string(it.kind), format_double(it.tau_q), detail::field(it.zeta), detail::field(it.alpha),
                           format_double(it.r), format_double(it.W), std::to_string(r.sites), format_double(it.g_i),
                           format_double(it.g_f), detail::field(r.total_time), detail::field(r.n),
                           format_double(r.eta), r.status});
    }
}

/// Parses a runs.csv table; the header must match exactly.
inline std::vector<RunRow> read_runs_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw FitError("runs table is empty");
    if (split_csv_line(line) != runs_header())
        throw FitError("runs table schema mismatch: expected header '" + [] {
            std::ostringstream os;
            write_csv_row(os, runs_header());
            auto s = os.str();
            s.pop_back();
            return s;
        }() + "'");
    std::vector<RunRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != runs_header().size())
            throw FitError("runs table line " + std::to_string(lineno) + ": expected " +
                           std::to_string(runs_header().size()) + " fields, got " + std::to_string(f.size()));
        auto num = [&](std::size_t k) {
            if (f[k].empty()) return std::numeric_limits<double>::quiet_NaN();
            const auto v = parse_double(f[k]);
            if (!v) throw FitError("runs table line " + std::to_string(lineno) + ": bad number '" + f[k] + "'");
            return *v;
        };
        RunRow r;
        if (f[0] == "linear") r.item.kind = ProtocolKind::Linear;
        else if (f[0] == "oai") r.item.kind = ProtocolKind::OAI;
        else if (f[0] == "nloai") r.item.kind = ProtocolKind::NLOAI;
        else throw FitError("runs table line " + std::to_string(lineno) + ": unknown protocol '" + f[0] + "'");
        r.item.tau_q = num(1);
        r.item.zeta = num(2);
        r.item.alpha = num(3);
        r.item.r = num(4);
        r.item.W = num(5);
        r.sites = static_cast<std::size_t>(num(6));
        r.item.g_i = num(7);
        r.item.g_f = num(8);
        r.total_time = num(9);
        r.n = num(10);
        r.eta = num(11);
        r.status = f[12];
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Fits over runs tables

struct OptimalRow {
    double W = 0.0;
    std::optional<OptimalTau> opt;
    std::string protocol;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double r = 1.0;
    std::string status = "ok";
};

inline void write_optimal_csv(std::ostream& os, const std::vector<OptimalRow>& rows)
{
    write_csv_row(os, optimal_header());
    for (const auto& o : rows)
        write_csv_row(os, {format_double(o.W), o.opt ? format_double(o.opt->tau_tilde) : "",
                           o.opt ? format_double(o.opt->n_min) : "", o.protocol, detail::field(o.alpha),
                           format_double(o.r), o.status});
}

struct AkzAnalysis {
    std::vector<OptimalRow> optimal; ///< ascending W
    std::optional<FitReport> report; ///< needs >= 3 W values with an interior minimum
    std::string error;
};

/// Per-W optimal quench times and the tau_tilde ~ W^{-s} fit.  Rows must
/// describe a single protocol family; W = 0 rows are ignored.
inline AkzAnalysis analyze_akz(const std::vector<RunRow>& rows)
{
    std::vector<RunRow> ok;
    for (const auto& r : rows)
        if (r.ok() && r.item.W > 0.0) ok.push_back(r);
    if (ok.empty()) throw FitError("akz_optimal: no successful rows with W > 0");
    const auto& first = ok.front().item;
    for (const auto& r : ok) {
        const auto& it = r.item;
        const bool same_zeta = (std::isnan(it.zeta) && std::isnan(first.zeta)) || !std::isnan(first.alpha) ||
                               it.zeta == first.zeta;
        if (it.kind != first.kind || it.r != first.r || it.g_i != first.g_i ||
            !(std::isnan(it.alpha) == std::isnan(first.alpha) && (std::isnan(it.alpha) || it.alpha == first.alpha)) ||
            !same_zeta)
            throw FitError("akz_optimal: rows mix protocols; give one protocol, g_i, r and zeta policy per table");
    }
    std::map<double, std::vector<Point>> curves;
    for (const auto& r : ok) curves[r.item.W].push_back({r.item.tau_q, r.n});

    AkzAnalysis a;
    std::vector<Point> pts;
    for (const auto& [W, curve] : curves) {
        OptimalRow o;
        o.W = W;
        o.protocol = to_string(first.kind);
        o.alpha = first.alpha;
        o.r = first.r;
        try {
            o.opt = optimal_tau(curve);
            pts.push_back({W, o.opt->tau_tilde});
        } catch (const FitError& e) {
            o.status = "failed: " + detail::sanitize(e.what());
        }
        a.optimal.push_back(o);
    }
    try {
        const auto fit = fit_power_law(pts);
        const auto th = theory_exponents(std::isnan(first.alpha) ? 0.0 : first.alpha, first.r);
        double theory = th.s_oai;
        if (first.kind == ProtocolKind::Linear) theory = first.r == 1.0 ? th.s_lq : th.s_nlq;
        else if (first.kind == ProtocolKind::NLOAI && first.r != 1.0) theory = th.s_nloai;
        a.report = FitReport{"akz_optimal", fit, theory, -fit.exponent, std::nullopt};
    } catch (const FitError& e) {
        a.error = std::string("akz_optimal: ") + e.what();
    }
    return a;
}

/// Fits `model` over a runs table.
inline FitReport fit_runs(const std::vector<RunRow>& rows, const std::string& model)
{
    std::vector<RunRow> ok;
    for (const auto& r : rows)
        if (r.ok() && std::isfinite(r.n)) ok.push_back(r);
    if (ok.empty()) throw FitError(model + ": no successful rows in the runs table");

    if (model == "kz" || model == "nlkz") {
        std::set<double> rs;
        std::vector<Point> pts;
        for (const auto& r : ok) {
            rs.insert(r.item.r);
            pts.push_back({r.item.tau_q, r.n});
        }
        if (rs.size() != 1) throw FitError(model + ": rows mix several r values");
        const double r = *rs.begin();
        if (model == "kz" && r != 1.0) throw FitError("kz: rows have r = " + format_double(r) + "; use nlkz");
        const auto fit = fit_power_law(pts);
        const auto th = theory_exponents(0.0, r);
        return {model, fit, -(model == "kz" ? th.beta_kz : th.beta_nlkz), fit.exponent, std::nullopt};
    }
    if (model == "zeta_collapse") {
        std::vector<ZetaRow> zr;
        for (const auto& r : ok)
            if (std::isfinite(r.item.zeta)) zr.push_back({r.item.tau_q, r.item.zeta, r.n});
        const auto c = fit_zeta_collapse(zr);
        return {model, c.fit, kReferenceCollapseExponent, c.y, c};
    }
    if (model == "akz_optimal") {
        auto a = analyze_akz(rows);
        if (!a.report) throw FitError(a.error);
        return *a.report;
    }
    throw FitError("unknown fit model '" + model + "' (expected kz, nlkz, zeta_collapse or akz_optimal)");
}

// ---------------------------------------------------------------------------
// Subcommands

struct CommandResult {
    int exit_code = 0;
    std::vector<std::string> files; ///< written, relative to the output directory
    std::string summary;
};

namespace detail {

inline std::filesystem::path prepare_out(const RunConfig& c)
{
    std::filesystem::path out(c.out);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec || !std::filesystem::is_directory(out)) throw ConfigError("output directory '" + c.out + "' is not writable");
    const auto probe = out / ".write_test";
    {
        std::ofstream t(probe);
        if (!t) throw ConfigError("output directory '" + c.out + "' is not writable");
    }
    std::filesystem::remove(probe, ec);
    return out;
}

inline std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path.string());
    return os;
}

inline void finish(const std::filesystem::path& out, const std::string& command, const RunConfig& c,
                   CommandResult& res, const std::vector<double>& seconds, std::chrono::steady_clock::time_point t0,
                   const std::string& manifest_name = "manifest.json")
{
    RunManifest m;
    m.command = command;
    m.config = c.resolved;
    for (const auto& f : res.files) m.files.push_back(file_entry(out, f));
    for (std::size_t i = 0; i < seconds.size(); ++i) m.runs.push_back({i, seconds[i]});
    m.total_seconds = seconds_since(t0);
    write_manifest(out / manifest_name, m);
}

inline void require_single_protocol(const RunConfig& c, const std::string& command)
{
    const bool single_zeta = c.kind == ProtocolKind::Linear || c.zeta_mode == ZetaMode::PowerLaw || c.zeta.size() == 1;
    if (c.g_i.size() != 1 || c.r.size() != 1 || !single_zeta)
        throw ConfigError(command + " needs a single g_i, r and zeta");
}

} // namespace detail

/// Schedule samples for a single protocol (first tau_Q of the grid).
inline CommandResult cmd_schedule(const RunConfig& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    detail::require_single_protocol(c, "schedule");
    if (c.tau_q.size() != 1) throw ConfigError("schedule needs exactly one tau_Q");
    validate(c);
    const auto items = expand(c);
    const auto p = build_protocol(items.front(), c.regime);
    const auto out = detail::prepare_out(c);
    CommandResult res;
    {
        auto os = detail::open_out(out / "schedule.csv");
        write_schedule_csv(os, p, c.samples);
    }
    res.files.push_back("schedule.csv");
    std::ostringstream s;
    s << "protocol = " << to_string(p.kind()) << "\nt_i = " << format_double(p.t_i())
      << "\nt_f = " << format_double(p.t_f()) << "\nT_total = " << format_double(total_time(p)) << '\n';
    if (p.kind() != ProtocolKind::Linear) s << "time_bound = " << format_double(time_bound(p)) << '\n';
    if (auto w = p.regime_warning()) s << "warning: " << *w << '\n';
    res.summary = s.str();
    detail::finish(out, "schedule", c, res, {}, t0);
    return res;
}

/// A sweep writes runs.csv and, if enabled, modes/run_XXXX.csv per row.
inline CommandResult run_sweep(const RunConfig& c, const std::string& command, Executed* keep = nullptr)
{
    const auto t0 = std::chrono::steady_clock::now();
    validate(c);
    const auto out = detail::prepare_out(c);
    const auto items = expand(c);
    auto ex = execute(c, items, c.write_modes);

    CommandResult res;
    {
        auto os = detail::open_out(out / "runs.csv");
        write_runs_csv(os, ex.rows);
    }
    res.files.push_back("runs.csv");
    if (c.write_modes) {
        std::filesystem::create_directories(out / "modes");
        for (std::size_t i = 0; i < ex.rows.size(); ++i) {
            if (!ex.results[i]) continue;
            char name[32];
            std::snprintf(name, sizeof(name), "modes/run_%04zu.csv", i);
            auto os = detail::open_out(out / name);
            write_modes_csv(os, *ex.results[i]);
            res.files.emplace_back(name);
        }
    }
    std::size_t failed = 0;
    std::ostringstream s;
    for (const auto& r : ex.rows) {
        if (!r.ok()) {
            ++failed;
            s << "run tau_Q = " << format_double(r.item.tau_q) << " W = " << format_double(r.item.W) << ": "
              << r.status << '\n';
        }
    }
    s << ex.rows.size() - failed << " of " << ex.rows.size() << " runs succeeded\n";
    res.exit_code = failed ? 1 : 0;
    res.summary = s.str();
    if (keep) {
        detail::finish(out, command, c, res, ex.seconds, t0);
        *keep = std::move(ex);
    } else {
        detail::finish(out, command, c, res, ex.seconds, t0);
    }
    return res;
}

inline CommandResult cmd_sweep(const RunConfig& c) { return run_sweep(c, "sweep"); }

/// One run; prints n and writes runs.csv plus modes.csv.
inline CommandResult cmd_quench(const RunConfig& c)
{
    detail::require_single_protocol(c, "quench");
    if (c.tau_q.size() != 1 || c.w.size() != 1) throw ConfigError("quench needs exactly one tau_Q and one W");
    return run_sweep(c, "quench");
}

/// (W x tau_Q) grid, per-W optimal quench time and the tau_tilde ~ W^{-s} fit.
/// Grids used by noise-sweep when the config leaves them unset.
inline RunConfig with_noise_defaults(RunConfig c)
{
    if (c.w_default) {
        c.w = {0.004, 0.008, 0.012, 0.016, 0.02};
        c.resolved["sweep.w"] = detail::join(c.w);
    }
    if (c.tau_default && c.kind == ProtocolKind::Linear) {
        c.tau_q = log_range(100, 20000, 4);
        c.resolved["sweep.tau_q"] = detail::join(c.tau_q);
    }
    return c;
}

inline CommandResult cmd_noise_sweep(const RunConfig& config)
{
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig c = with_noise_defaults(config);
    detail::require_single_protocol(c, "noise-sweep");
    bool noisy = false;
    for (double w : c.w) noisy = noisy || w > 0.0;
    if (!noisy) throw ConfigError("noise-sweep needs at least one W > 0");
    Executed ex;
    auto res = run_sweep(c, "noise-sweep", &ex);
    const auto out = std::filesystem::path(c.out);

    std::ostringstream s;
    s << res.summary;
    AkzAnalysis a;
    try {
        a = analyze_akz(ex.rows);
    } catch (const FitError& e) {
        a.error = e.what();
    }
    {
        auto os = detail::open_out(out / "optimal_tau.csv");
        write_optimal_csv(os, a.optimal);
    }
    res.files.push_back("optimal_tau.csv");
    for (const auto& o : a.optimal)
        if (!o.opt) s << "W = " << format_double(o.W) << ": " << o.status << '\n';
    if (a.report) {
        {
            auto os = detail::open_out(out / "fit_report.txt");
            write_fit_report_text(os, *a.report);
        }
        {
            auto os = detail::open_out(out / "fit_report.csv");
            write_fit_report_csv(os, *a.report);
        }
        res.files.push_back("fit_report.txt");
        res.files.push_back("fit_report.csv");
        write_fit_report_text(s, *a.report);
    } else {
        s << a.error << '\n';
        res.exit_code = 1;
    }
    res.summary = s.str();
    detail::finish(out, "noise-sweep", c, res, ex.seconds, t0);
    return res;
}

/// Fits `fit.model` over `fit.input` (default: <out>/runs.csv).
inline CommandResult cmd_fit(const RunConfig& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    validate(c, false);
    const std::filesystem::path input = c.fit_input.empty() ? std::filesystem::path(c.out) / "runs.csv" : std::filesystem::path(c.fit_input);
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot read fit input " + input.string());
    const auto rows = read_runs_csv(in);
    const auto report = fit_runs(rows, c.fit_model);
    const auto out = detail::prepare_out(c);
    CommandResult res;
    {
        auto os = detail::open_out(out / "fit_report.txt");
        write_fit_report_text(os, report);
    }
    {
        auto os = detail::open_out(out / "fit_report.csv");
        write_fit_report_csv(os, report);
    }
    res.files = {"fit_report.txt", "fit_report.csv"};
    if (c.fit_model == "akz_optimal") {
        const auto a = analyze_akz(rows);
        auto os = detail::open_out(out / "optimal_tau.csv");
        write_optimal_csv(os, a.optimal);
        res.files.push_back("optimal_tau.csv");
    }
    std::ostringstream s;
    write_fit_report_text(s, report);
    res.summary = s.str();
    detail::finish(out, "fit", c, res, {}, t0, "fit_manifest.json");
    return res;
}

} // namespace oai::run
