// Acceptance suite: one [PASS]/[FAIL] line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oai/dynamics.hpp"
#include "oai/run/config.hpp"
#include "oai/run/manifest.hpp"
#include "oai/run/runner.hpp"
#include "oai/scaling.hpp"

using namespace oai;
namespace fs = std::filesystem;

namespace {

const std::size_t kWorkers = std::max(1u, std::thread::hardware_concurrency());

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what)
    {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [out of tolerance]");
    }
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double density(const QuenchProtocol& p, double W = 0.0, std::size_t sites = 2000)
{
    return defect_density(p, sites, W, {}, kWorkers).n;
}

std::vector<double> log_grid(double lo, double hi, int per_decade)
{
    const int n = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
    std::vector<double> g;
    for (int k = 0; k <= n; ++k) g.push_back(lo * std::pow(10.0, static_cast<double>(k) / per_decade));
    return g;
}

// Exponent s' of tau_tilde ~ W^{-s'} over the standard noise grid.
Outcome akz_exponent(const std::function<QuenchProtocol(double)>& make, const std::vector<double>& taus,
                     double theory, double tol)
{
    Outcome o;
    std::vector<Point> tilde;
    std::string mins;
    for (double W : {0.004, 0.008, 0.012, 0.016, 0.02}) {
        std::vector<Point> curve;
        for (double tau : taus) curve.push_back({tau, density(make(tau), W)});
        const auto opt = optimal_tau(curve);
        tilde.push_back({W, opt.tau_tilde});
        mins += (mins.empty() ? "" : ",") + fmt("%.1f", opt.tau_tilde);
    }
    const double s = -fit_power_law(tilde).exponent;
    o.check(std::abs(s / theory - 1.0) <= tol,
            "s'=" + fmt("%.4f", s) + " vs " + fmt("%.4f", theory) + " (rel " + fmt("%.3f", std::abs(s / theory - 1.0)) +
                ", tol " + fmt("%.2f", tol) + "), tau_tilde=[" + mins + "]");
    return o;
}

Outcome ac1()
{
    Outcome o;
    std::vector<Point> pts;
    for (double tau : {50.0, 100.0, 200.0, 400.0, 800.0}) pts.push_back({tau, density(make_oai(tau, 32, 2, 0))});
    const auto f = fit_power_law(pts);
    o.check(std::abs(f.exponent + 0.5) <= 0.05, "exponent=" + fmt("%.4f", f.exponent) + " vs -0.5 +- 0.05");
    const double ratio = pts.back().y / kz_reference(800);
    o.check(ratio >= 0.9 && ratio <= 1.1, "n/n_KZ(800)=" + fmt("%.4f", ratio) + " in [0.9, 1.1]");
    return o;
}

Outcome ac2()
{
    Outcome o;
    std::vector<double> n;
    for (double g : {1.5, 2.0, 3.0, 5.0}) n.push_back(density(make_oai(200, 32, g, 0)));
    const auto [lo, hi] = std::minmax_element(n.begin(), n.end());
    const double spread = *hi / *lo - 1.0;
    o.check(spread <= 0.05, "max pairwise spread=" + fmt("%.4f", spread) + " <= 0.05");
    return o;
}

Outcome ac3()
{
    Outcome o;
    const double n = sudden_quench(2, 0, 2000).n;
    o.check(std::abs(n - 0.375) <= 0.02, "n=" + fmt("%.6f", n) + " vs 0.375 +- 0.02");
    // Independent quadrature of p_q = sin^2 of half the Bogoliubov angle difference.
    double acc = 0;
    const std::size_t N = 2000;
    for (std::size_t m = 1; m <= N / 2; ++m) {
        const double q = std::numbers::pi * (2.0 * m - 1.0) / N;
        const double a = std::atan2(std::sin(q), 2.0 - std::cos(q));
        const double b = std::atan2(std::sin(q), -std::cos(q));
        acc += std::pow(std::sin(0.5 * (a - b)), 2);
    }
    const double oracle = 2.0 * acc / N;
    o.check(std::abs(n - oracle) <= 1e-12, "independent oracle=" + fmt("%.6f", oracle));
    return o;
}

Outcome ac4()
{
    Outcome o;
    std::vector<ZetaRow> rows;
    for (double tau : {500.0, 1000.0, 2000.0})
        for (int k = 0; k <= 10; ++k) {
            const double zeta = 0.5 + 0.25 * k;
            rows.push_back({tau, zeta, density(make_oai(tau, zeta, 2, 0))});
        }
    const auto c = fit_zeta_collapse(rows);
    o.check(c.y >= 1.55 && c.y <= 1.90, "y=" + fmt("%.4f", c.y) + " in [1.55, 1.90]");
    o.check(c.x >= 0.08 && c.x <= 0.15, "x=" + fmt("%.4f", c.x) + " in [0.08, 0.15]");
    return o;
}

Outcome ac5()
{
    return akz_exponent([](double tau) { return make_oai(tau, std::pow(tau, 0.25), 2, 0); }, log_grid(50, 5000, 8),
                        16.0 / 9.0, 0.10);
}

Outcome ac6()
{
    return akz_exponent([](double tau) { return make_linear(tau, 2, 0); }, log_grid(20, 3000, 8), 4.0 / 3.0, 0.05);
}

QuenchProtocol nloai(double tau, double zeta, double r)
{
    return make_nloai(tau, zeta, r, 5, 0, CriticalData::ising(), ZetaRegime::Relaxed);
}

Outcome ac7()
{
    Outcome o;
    for (double r : {2.0, 3.0}) {
        std::vector<Point> pts;
        for (double tau : {25.0, 50.0, 100.0, 200.0, 400.0}) pts.push_back({tau, density(nloai(tau, 320, r))});
        const double target = -theory_exponents(0, r).beta_nlkz;
        const double e = fit_power_law(pts).exponent;
        o.check(std::abs(e - target) <= 0.05,
                "r=" + fmt("%g", r) + " exponent=" + fmt("%.4f", e) + " vs " + fmt("%.4f", target) + " +- 0.05");
    }
    for (double r : {2.0, 3.0})
        for (double tau : {100.0, 400.0}) {
            const double ref = density(make_nlq(tau, r, 5, 0));
            std::vector<double> n;
            for (double zeta : {20.0, 80.0, 320.0}) n.push_back(density(nloai(tau, zeta, r)));
            const bool ok = n[0] > n[1] && n[1] > n[2] && n[2] > ref;
            o.check(ok, "r=" + fmt("%g", r) + " tau=" + fmt("%g", tau) + " n(20,80,320)=" + fmt("%.4e", n[0]) + "," +
                            fmt("%.4e", n[1]) + "," + fmt("%.4e", n[2]) + " > NLQ " + fmt("%.4e", ref));
        }
    return o;
}

Outcome ac8()
{
    Outcome o;
    const double W = 0.008;
    double prev = 0;
    for (double tau : {400.0, 800.0, 1600.0}) {
        const double a = density(make_nloai(tau, 80, 2, 5, 0), W);
        const double b = density(make_nlq(tau, 2, 5, 0), W);
        o.check(a > prev, "tau=" + fmt("%g", tau) + " on rising branch");
        o.check(a < b, "NLOAI " + fmt("%.4e", a) + " < NLQ " + fmt("%.4e", b));
        prev = a;
    }
    return o;
}

std::string sweep_bytes(const fs::path& dir, int workers)
{
    std::istringstream in(R"(
[protocol]
kind = oai
g_i = 2
g_f = 0
zeta = 16
[sweep]
tau_q = 40, 80, 160
w = 0, 0.01
[run]
modes = 200
)");
    auto s = run::parse_settings(in);
    fs::remove_all(dir);
    run::apply_overrides(s, {"run.out=" + dir.string(), "run.workers=" + std::to_string(workers)});
    const auto res = run::cmd_sweep(run::build_config(s));
    std::string all = std::to_string(res.exit_code);
    for (const auto& f : res.files) all += f + "\n" + run::read_file(dir / f);
    fs::remove_all(dir);
    return all;
}

Outcome ac9()
{
    Outcome o;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> utau(20, 300), uq(0.005, 3.1);

    double norm = 0, trace = 0, neg = 0, lind = 0;
    for (int k = 0; k < 30; ++k) {
        const auto p = make_oai(utau(rng), 8, 2, 0);
        const double q = uq(rng);
        const auto psi = evolve_pure(p, q);
        norm = std::max(norm, std::abs(psi.norm2() - 1.0));
        const auto rho0 = evolve_lindblad(p, q, 0.0);
        lind = std::max(lind, std::abs(excitation_probability(psi, q, 0.0) - excitation_probability(rho0, q, 0.0)));
        const auto rho = evolve_lindblad(p, q, 0.05);
        trace = std::max(trace, std::abs(rho.trace() - 1.0));
        neg = std::min(neg, rho.eigenvalues()[0]);
    }
    o.check(norm <= 1e-8 && trace <= 1e-8 && neg >= -1e-10,
            "norm drift=" + fmt("%.1e", norm) + " trace drift=" + fmt("%.1e", trace) + " min eig=" + fmt("%.1e", neg));
    o.check(lind <= 1e-6, "W=0 Lindblad vs pure=" + fmt("%.1e", lind));

    double halving = 0;
    const auto ph = make_oai(200, 32, 2, 0);
    for (double q : {0.01, 0.05, 0.3, 1.5}) {
        const double a = excitation_probability(evolve_pure(ph, q, StepPolicy{0.02}), q, 0.0);
        const double b = excitation_probability(evolve_pure(ph, q, StepPolicy{0.01}), q, 0.0);
        halving = std::max(halving, std::abs(a - b));
    }
    o.check(halving <= 1e-6, "step halving=" + fmt("%.1e", halving));

    const auto big = make_oai(50, 1e8, 2, 0, CriticalData::ising(), ZetaRegime::Relaxed);
    const auto lq = make_linear(50, 2, 0);
    const double dn = std::abs(density(big, 0.0, 400) - density(lq, 0.0, 400));
    o.check(dn <= 1e-3, "zeta=1e8 vs LQ |dn|=" + fmt("%.1e", dn));

    double ident = 0, bound = 0;
    for (const auto& p : {make_oai(1000, 32, 2, 0), make_oai(300, 2, 3, 0), make_nloai(2000, 320, 2, 5, 0),
                          make_nloai(2000, 80, 3, 5, 0)}) {
        for (double t : schedule_samples(p, 1001)) {
            const auto s = timescales(p, t, true);
            ident = std::max(ident, std::abs(s.drive / s.relax / *p.zeta() - 1.0));
        }
        bound = std::max(bound, total_time(p) / time_bound(p));
    }
    o.check(ident <= 1e-9, "timescale identity rel=" + fmt("%.1e", ident));
    o.check(bound <= 1.0, "max T/(2 theta)=" + fmt("%.4f", bound));

    const auto tmp = fs::temp_directory_path();
    const bool same = sweep_bytes(tmp / "oaiq_accept_w1", 1) == sweep_bytes(tmp / "oaiq_accept_w3", 3);
    const auto pd = make_oai(100, 16, 2, 0);
    const auto r1 = defect_density(pd, 300, 0.01, {}, 1), r4 = defect_density(pd, 300, 0.01, {}, 4);
    bool modes_same = r1.modes.size() == r4.modes.size();
    for (std::size_t j = 0; modes_same && j < r1.modes.size(); ++j) modes_same = r1.modes[j].p == r4.modes[j].p;
    o.check(same && modes_same, std::string("byte-identical across worker counts=") + (same && modes_same ? "yes" : "no"));
    return o;
}

Outcome ac10()
{
    Outcome o;
    double worst = 0;
    std::size_t count = 0;
    const auto grid = mode_grid(2000);
    for (double tau : {100.0, 200.0}) {
        const auto p = make_linear(tau, 2, 0);
        for (double q : grid.q) {
            if (q > 0.05) break;
            const double pq = excitation_probability(evolve_pure(p, q), q, 0.0);
            worst = std::max(worst, std::abs(pq - std::exp(-2 * std::numbers::pi * tau * q * q)));
            ++count;
        }
    }
    o.check(worst <= 0.02, "max |p_q - LZ|=" + fmt("%.4f", worst) + " over " + std::to_string(count) + " modes");
    return o;
}

} // namespace

// Optional arguments select criteria by number; default runs all.
int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, Outcome (*)()>> criteria{
        {"KZ scaling", ac1},          {"initial-coupling independence", ac2}, {"sudden limit", ac3},
        {"zeta collapse", ac4},       {"AKZ exponent OAI", ac5},            {"AKZ exponent LQ", ac6},
        {"nonlinear KZ", ac7},        {"NLOAI below NLQ under noise", ac8}, {"property suite", ac9},
        {"LZ mode check", ac10}};
    std::vector<bool> selected(criteria.size(), argc < 2);
    for (int a = 1; a < argc; ++a) {
        const int k = std::atoi(argv[a]);
        if (k < 1 || k > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "unknown criterion '%s'\n", argv[a]);
            return 2;
        }
        selected[k - 1] = true;
    }
    int failed = 0, ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i]) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.check(false, std::string("error: ") + e.what());
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] AC%zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), s);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
