// oaiq: schedules, quenches, sweeps and fits for the transverse-field Ising chain.
//
// Exit codes: 0 success, 1 run or fit failure, 2 configuration error.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "oai/run/config.hpp"
#include "oai/run/manifest.hpp"
#include "oai/run/runner.hpp"

namespace {

struct Globals {
    std::string config;
    std::vector<std::string> set;
    std::string out;
    std::size_t workers = 0;
    double eta = 0.0;
    std::size_t modes = 0;
    std::string model;
    std::string input;
};

oai::run::RunConfig load(const Globals& g)
{
    using namespace oai::run;
    Settings s;
    if (!g.config.empty()) s = read_settings_file(g.config);
    apply_overrides(s, g.set);
    // Dedicated flags win over the file and --set.
    if (!g.out.empty()) s["run.out"] = g.out;
    if (g.workers) s["run.workers"] = std::to_string(g.workers);
    if (g.eta > 0.0) s["run.eta"] = oai::format_double(g.eta);
    if (g.modes) s["run.modes"] = std::to_string(g.modes);
    if (!g.model.empty()) s["fit.model"] = g.model;
    if (!g.input.empty()) s["fit.input"] = g.input;
    return build_config(s);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Optimized adiabatic-impulse quenches of the transverse-field Ising chain"};
    app.set_version_flag("--version", std::string(oai::run::kToolName) + " " + oai::run::kToolVersion);
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config, "INI config file, or a manifest.json to replay");
    app.add_option("--set", g.set, "Override one setting: section.key=value (repeatable)");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--eta", g.eta, "RK4 step factor")->check(CLI::PositiveNumber);
    app.add_option("--modes", g.modes, "Chain length N (even)")->check(CLI::PositiveNumber);

    auto* schedule = app.add_subcommand("schedule", "Write the drive schedule of one protocol");
    auto* quench = app.add_subcommand("quench", "Run one quench and write per-mode excitations");
    auto* sweep = app.add_subcommand("sweep", "Run every (g_i, r, zeta, W, tau_Q) tuple");
    auto* noise = app.add_subcommand("noise-sweep", "Run a (W x tau_Q) grid and locate the optimal quench time");
    auto* fit = app.add_subcommand("fit", "Fit a runs.csv table");
    fit->add_option("input", g.input, "runs.csv to fit (default <out>/runs.csv)");
    fit->add_option("--model", g.model, "kz | nlkz | zeta_collapse | akz_optimal");
    std::string verify_dir;
    auto* verify = app.add_subcommand("verify", "Check output files against a manifest");
    verify->add_option("dir", verify_dir, "Output directory holding manifest.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    using namespace oai::run;
    try {
        if (verify->parsed()) {
            const auto m = read_manifest(std::filesystem::path(verify_dir) / "manifest.json");
            const auto bad = verify_manifest(verify_dir, m);
            for (const auto& b : bad) std::cerr << b << '\n';
            std::cout << m.files.size() - bad.size() << " of " << m.files.size() << " files match\n";
            return bad.empty() ? 0 : 1;
        }
        const auto cfg = load(g);
        CommandResult res;
        if (schedule->parsed()) res = cmd_schedule(cfg);
        else if (quench->parsed()) res = cmd_quench(cfg);
        else if (sweep->parsed()) res = cmd_sweep(cfg);
        else if (noise->parsed()) res = cmd_noise_sweep(cfg);
        else if (fit->parsed()) res = cmd_fit(cfg);
        std::cout << res.summary;
        return res.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const oai::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const oai::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
