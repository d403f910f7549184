#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ddfv/errors.hpp"
#include "ddfv/format.hpp"
#include "ddfv/moser.hpp"
#include "ddfv/run.hpp"
#include "ddfv/scenario.hpp"

namespace fs = std::filesystem;
using namespace ddfv;

namespace {

struct Common {
    std::string out = ".";
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
};

std::string read_text(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw invalid_argument("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Scenario load_with_overrides(const std::string& path, const Common& c) {
    ScenarioSpec spec = parse_scenario_text(read_text(path));
    if (c.tol) spec.gummel_tol = *c.tol;
    if (c.seed) spec.seed = *c.seed;
    const auto dir = fs::path(path).parent_path();
    return build_scenario(std::move(spec), dir.empty() ? "." : dir.string());
}

std::ofstream open_out(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    const auto path = fs::path(c.out) / name;
    std::ofstream f(path);
    if (!f) throw invalid_argument("cannot write " + path.string());
    return f;
}

int cmd_run(const std::string& path, const Common& c, bool quiet) {
    const Scenario sc = load_with_overrides(path, c);
    RunOptions opts;
    if (!quiet) {
        opts.progress = [](const DiagnosticsRecord& r) {
            if (r.time_index % 100 == 0)
                std::cerr << "step " << r.time_index << "  E=" << format_double(r.entropy) << "  |N|="
                          << format_double(r.linf_n) << "  |P|=" << format_double(r.linf_p) << '\n';
        };
    }
    const TrajectoryStore store = run(sc, opts);
    {
        auto f = open_out(c, "store.json");
        save_store(f, store);
    }
    {
        auto f = open_out(c, "diagnostics.csv");
        write_diagnostics_csv(f, store);
    }
    {
        auto f = open_out(c, "fields_final.csv");
        write_fields_csv(f, store, sc.mesh, store.snapshots.back().time_index);
    }
    if (store.moser) {
        auto f = open_out(c, "moser.csv");
        write_moser_csv(f, *store.moser);
    }
    std::cout << "scenario " << store.scenario_hash << ": " << store.records.size() - 1 << " steps, "
              << store.dt_halvings << " dt halvings\n";
    if (!store.complete) {
        std::cerr << "run aborted: " << store.failure << '\n';
        return exit_code_for(store.failure_kind);
    }
    const VerifyReport v = verify(store);
    for (const auto& f : v.failures) std::cerr << "FAIL " << f << '\n';
    std::cout << (v.pass() ? "verification passed" : "verification FAILED") << '\n';
    return v.pass() ? 0 : 2;
}

int cmd_equilibrium(const std::string& path, const Common& c) {
    const Scenario sc = load_with_overrides(path, c);
    const EquilibriumState eq =
        solve_equilibrium(sc.mesh, sc.model.lambda, sc.model.doping, sc.alpha, sc.model.psi_dirichlet);
    auto f = open_out(c, "equilibrium.csv");
    write_fields_csv(f, sc.mesh, eq.n_star, eq.p_star, eq.psi_star.cell_values);
    std::cout << "alpha " << format_double(eq.alpha) << "\nnewton iterations " << eq.residual_history.size() - 1
              << "\nfinal residual " << format_double(eq.residual_history.back()) << '\n';
    return 0;
}

int cmd_verify(const std::string& path) {
    const TrajectoryStore store = load_store_file(path);
    const VerifyReport v = verify(store);
    std::cout << "dissipation checks " << v.dissipation_checked << ", moment checks " << v.prop2_checked
              << ", recomputed " << v.prop2_recomputed << '\n';
    for (const auto& f : v.failures) std::cout << "FAIL " << f << '\n';
    std::cout << (v.pass() ? "PASS" : "FAIL") << '\n';
    return v.pass() ? 0 : 2;
}

int cmd_nash(const std::string& path, std::size_t samples, const Common& c) {
    const std::string text = read_text(path);
    const std::uint64_t seed = c.seed.value_or(1);
    NashProbeResult r;
    if (text.rfind("FVMESH", 0) == 0) {
        std::istringstream in(text);
        const Mesh mesh = read_mesh(in);
        r = nash_probe(mesh, samples, seed, path);
    } else {
        const Scenario sc = load_with_overrides(path, c);
        r = nash_probe(sc.mesh, samples, c.seed.value_or(sc.spec.seed), sc.hash());
    }
    auto f = open_out(c, "nash.csv");
    f << "sample,ratio\n";
    for (std::size_t i = 0; i < r.ratios.size(); ++i) f << i << ',' << format_double(r.ratios[i]) << '\n';
    std::cout << "samples " << r.samples << " (skipped " << r.skipped << ")\nempirical constant "
              << format_double(r.empirical_constant) << '\n';
    return 0;
}

int cmd_moser(const std::string& path, std::optional<int> kmax, const Common& c) {
    TrajectoryStore store = load_store_file(path);
    if (!store.complete) throw Error(ErrorKind::Precondition, "store is incomplete: " + store.failure);
    const Scenario sc = scenario_of(store);
    const std::uint64_t seed = c.seed.value_or(sc.spec.seed);
    if (c.seed) store.nash.reset();
    finalize_moser(store, sc.mesh, seed, sc.spec.nash_samples, kmax);
    write_moser_text(std::cout, *store.moser);
    auto f = open_out(c, "moser.csv");
    write_moser_csv(f, *store.moser);
    return store.moser->pass() ? 0 : 2;
}

int cmd_export(const std::string& path, const std::string& what, std::optional<std::size_t> step, const Common& c) {
    const TrajectoryStore store = load_store_file(path);
    if (what == "diagnostics") {
        auto f = open_out(c, "diagnostics.csv");
        write_diagnostics_csv(f, store);
    } else if (what == "fields") {
        const Scenario sc = scenario_of(store);
        const std::size_t s = step.value_or(store.snapshots.back().time_index);
        auto f = open_out(c, "fields_" + std::to_string(s) + ".csv");
        write_fields_csv(f, store, sc.mesh, s);
    } else if (what == "moser") {
        if (!store.moser) throw invalid_argument("store has no Moser report; run moser-report first");
        auto f = open_out(c, "moser.csv");
        write_moser_csv(f, *store.moser);
    } else {
        throw invalid_argument("unknown export '" + what + "'");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-volume drift-diffusion simulator with Scharfetter-Gummel fluxes"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--out", common.out, "Output directory")->capture_default_str();
    app.add_option("--tol", common.tol, "Gummel tolerance override");
    app.add_option("--seed", common.seed, "Random seed override");

    std::string input;
    bool quiet = false;
    auto* run_cmd = app.add_subcommand("run", "Time-step a scenario and write store.json and CSV files");
    run_cmd->add_option("scenario", input)->required();
    run_cmd->add_flag("-q,--quiet", quiet, "No progress output");

    auto* eq_cmd = app.add_subcommand("equilibrium", "Solve for thermal equilibrium and write equilibrium.csv");
    eq_cmd->add_option("scenario", input)->required();

    auto* verify_cmd = app.add_subcommand("verify", "Re-check a store offline");
    verify_cmd->add_option("store", input)->required();

    std::size_t samples = 200;
    auto* nash_cmd = app.add_subcommand("nash-probe", "Sample the discrete Nash ratio on a scenario or mesh file");
    nash_cmd->add_option("input", input)->required();
    nash_cmd->add_option("--samples", samples)->capture_default_str();

    std::optional<int> kmax;
    auto* moser_cmd = app.add_subcommand("moser-report", "Constants and cascade check for a store");
    moser_cmd->add_option("store", input)->required();
    moser_cmd->add_option("--kmax", kmax);

    std::string what = "diagnostics";
    std::optional<std::size_t> step;
    auto* export_cmd = app.add_subcommand("export", "Write CSV from a store");
    export_cmd->add_option("store", input)->required();
    export_cmd->add_option("--what", what)->check(CLI::IsMember({"diagnostics", "fields", "moser"}))->capture_default_str();
    export_cmd->add_option("--step", step);

    for (auto* sub : {run_cmd, eq_cmd, verify_cmd, nash_cmd, moser_cmd, export_cmd}) {
        sub->add_option("--out", common.out, "Output directory");
        sub->add_option("--tol", common.tol, "Gummel tolerance override");
        sub->add_option("--seed", common.seed, "Random seed override");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 4;
    }

    try {
        if (*run_cmd) return cmd_run(input, common, quiet);
        if (*eq_cmd) return cmd_equilibrium(input, common);
        if (*verify_cmd) return cmd_verify(input);
        if (*nash_cmd) return cmd_nash(input, samples, common);
        if (*moser_cmd) return cmd_moser(input, kmax, common);
        if (*export_cmd) return cmd_export(input, what, step, common);
    } catch (const Error& e) {
        std::cerr << to_string(e.kind()) << ": " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 4;
}
