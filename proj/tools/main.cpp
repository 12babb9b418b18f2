#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ringlwr/config.hpp"
#include "ringlwr/eval.hpp"
#include "ringlwr/fd.hpp"
#include "ringlwr/field_io.hpp"
#include "ringlwr/kde.hpp"
#include "ringlwr/train.hpp"

namespace fs = std::filesystem;
using namespace ringlwr;

namespace {

std::string require_out(const ExperimentConfig& cfg) {
    if (cfg.out_dir.empty())
        throw ConfigError("an output directory is required (pass --out or set paths.out_dir)");
    return cfg.out_dir;
}

void echo_config(const std::string& out_dir, const ExperimentConfig& cfg) {
    fs::create_directories(out_dir);
    write_text_file(out_dir + "/config_effective.cfg", render_config(cfg));
}

std::vector<double> parse_list_flag(const std::string& raw, const std::string& what) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= raw.size()) {
        std::size_t comma = raw.find(',', start);
        std::string item =
            raw.substr(start, comma == std::string::npos ? comma : comma - start);
        if (item.empty()) throw ConfigError(what + ": empty list entry");
        out.push_back(parse_double(item, what));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::optional<Field> read_field_if(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return read_field(path);
}

int cmd_simulate(const ExperimentConfig& cfg) {
    const std::string out = require_out(cfg);
    cfg.validate_grid();
    cfg.validate_solver();
    const RingGrid grid = cfg.grid();
    const int n_sub = required_substeps(grid, cfg.solver_fd.v_f, cfg.cfl_safety);
    std::cout << "[simulate] grid " << grid.n_t << "x" << grid.n_x << " ("
              << format_double(cfg.horizon_s) << " s, " << format_double(cfg.ring_length_m)
              << " m), " << n_sub << " sub-steps per output step\n";
    TwinArtifacts twin = simulate_twin(cfg);
    echo_config(out, cfg);
    write_field(out + "/truth_rho.csv", twin.truth_rho, "veh/m");
    write_field(out + "/truth_v.csv", twin.truth_v, "m/s");
    TrajectorySet traj = synth_trajectories(twin.truth_v, cfg.n_vehicles);
    write_trajectories(out + "/trajectories.csv", traj, cfg.ring_length_m);
    std::cout << "[simulate] wrote truth_rho.csv, truth_v.csv, trajectories.csv ("
              << cfg.n_vehicles << " vehicles) to " << out << "\n";
    return 0;
}

int cmd_reconstruct(const ExperimentConfig& cfg) {
    const std::string out = require_out(cfg);
    cfg.validate_grid();
    cfg.validate_kde();
    if (cfg.trajectories.empty())
        throw ConfigError("paths.trajectories is required (or pass --trajectories)");
    TrajectorySet traj = read_trajectories(cfg.trajectories, cfg.ring_length_m);
    KdeConfig kcfg{cfg.bandwidth_x_m, cfg.bandwidth_t_s, cfg.grid()};
    Field rho = reconstruct_density(traj, kcfg);
    std::vector<std::uint8_t> fallback;
    Field v = reconstruct_speed(traj, kcfg, &fallback);
    std::size_t n_fallback = 0;
    for (std::uint8_t b : fallback) n_fallback += b;
    echo_config(out, cfg);
    write_field(out + "/recon_rho.csv", rho, "veh/m");
    write_field(out + "/recon_v.csv", v, "m/s");
    std::cout << "[reconstruct] " << traj.records.size() << " records -> recon_rho.csv, "
              << "recon_v.csv (" << n_fallback << " speed cells from nearest neighbor) in "
              << out << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& resume) {
    const std::string out = require_out(cfg);
    cfg.validate_grid();
    cfg.validate_training();
    cfg.require_seed();
    std::string observed_path = cfg.observed_rho.empty() ? cfg.truth_rho : cfg.observed_rho;
    if (observed_path.empty())
        throw ConfigError("paths.observed_rho is required (or pass --observed)");
    Field observed = read_field(observed_path);
    std::optional<Field> truth_rho = read_field_if(cfg.truth_rho);
    std::optional<Field> truth_v = read_field_if(cfg.truth_v);

    const std::string report_dir = out + "/report";
    fs::create_directories(report_dir);
    echo_config(out, cfg);

    TrainSettings settings = settings_from_config(cfg);
    settings.checkpoint_path = out + "/checkpoint.txt";
    settings.trace_path = report_dir + "/loss_trace.csv";
    settings.resume_from = resume;
    settings.log = &std::cerr;

    RunOutcome outcome = run_experiment(cfg, observed, truth_rho, truth_v, report_dir, settings);
    std::cout << "[train] final loss " << format_double(outcome.result.final_parts.total)
              << " (data " << format_double(outcome.result.final_parts.data) << ", dyn "
              << format_double(outcome.result.final_parts.phy_dyn) << ", static "
              << format_double(outcome.result.final_parts.phy_static) << ")\n";
    if (outcome.metrics.e_rho_pct)
        std::cout << "[train] e_rho = " << format_double(*outcome.metrics.e_rho_pct) << "%\n";
    if (outcome.metrics.e_v_pct)
        std::cout << "[train] e_v = " << format_double(*outcome.metrics.e_v_pct) << "%\n";
    if (outcome.metrics.kernel_mass_frac_10m)
        std::cout << "[train] kernel mass in first 10 m = "
                  << format_double(*outcome.metrics.kernel_mass_frac_10m) << "\n";
    std::cout << "[train] report in " << report_dir << "\n";
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
    if (cfg.estimate_rho.empty() || cfg.truth_rho.empty())
        throw ConfigError("evaluate needs paths.estimate_rho and paths.truth_rho "
                          "(or --estimate/--truth)");
    Field est = read_field(cfg.estimate_rho);
    Field truth = read_field(cfg.truth_rho);
    std::vector<std::pair<std::string, std::string>> items;
    items.emplace_back("e_rho_pct", format_double(rel_l2_error_pct(est, truth)));
    if (!cfg.estimate_v.empty() && !cfg.truth_v.empty()) {
        Field est_v = read_field(cfg.estimate_v);
        Field truth_v = read_field(cfg.truth_v);
        items.emplace_back("e_v_pct", format_double(rel_l2_error_pct(est_v, truth_v)));
    }
    const std::string summary = render_summary(items);
    std::cout << summary;
    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        write_text_file(cfg.out_dir + "/eval_summary.txt", summary);
    }
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, std::vector<double> etas,
              std::vector<double> alphas) {
    const std::string out = require_out(cfg);
    cfg.validate_grid();
    cfg.validate_training();
    cfg.require_seed();
    if (etas.empty()) etas = cfg.sweep_etas;
    if (alphas.empty()) alphas = cfg.sweep_alphas;
    if (etas.empty() && alphas.empty())
        throw ConfigError("sweep needs --etas or --alphas (or the matching config keys)");
    if (!etas.empty() && !alphas.empty())
        throw ConfigError("sweep takes either kernel supports or data weights, not both");

    std::string observed_path = cfg.observed_rho.empty() ? cfg.truth_rho : cfg.observed_rho;
    if (observed_path.empty())
        throw ConfigError("paths.observed_rho is required (or pass --observed)");
    Field observed = read_field(observed_path);
    std::optional<Field> truth_rho = read_field_if(cfg.truth_rho);
    std::optional<Field> truth_v = read_field_if(cfg.truth_v);
    echo_config(out, cfg);

    std::size_t failed = 0, total = 0;
    if (!etas.empty()) {
        auto rows = eta_sweep(cfg, observed, truth_rho, truth_v, etas, out, &std::cerr);
        write_text_file(out + "/sweep_etas.csv", render_eta_sweep(rows));
        std::cout << render_eta_sweep(rows);
        total = rows.size();
        for (const auto& r : rows) failed += r.ok ? 0 : 1;
    } else {
        auto rows = alpha_sweep(cfg, observed, truth_rho, truth_v, alphas, out, &std::cerr);
        write_text_file(out + "/sweep_alphas.csv", render_alpha_sweep(rows));
        std::cout << render_alpha_sweep(rows);
        total = rows.size();
        for (const auto& r : rows) failed += r.ok ? 0 : 1;
    }
    if (failed == total)
        throw NumericError("every sweep run failed; see the sweep table for details");
    std::cout << "[sweep] " << (total - failed) << "/" << total << " runs succeeded, results in "
              << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal ring-road traffic: simulation, reconstruction, and "
                 "physics-constrained model learning"};
    app.require_subcommand(1);

    std::string config_path, out_flag;
    std::optional<std::uint64_t> seed_flag;
    int jobs = 1;
    app.add_option("--config", config_path, "Experiment config file (key = value sections)");
    app.add_option("--out", out_flag, "Output directory (overrides paths.out_dir)");
    app.add_option("--seed", seed_flag, "Master RNG seed (overrides training.seed)");
    app.add_option("--jobs", jobs, "Worker count; runs are single-threaded for determinism")
        ->check(CLI::Range(1, 1024));

    auto* sim = app.add_subcommand("simulate", "Generate ground-truth fields and trajectories");
    sim->fallthrough();
    std::string sim_kernel, sim_eta;
    sim->add_option("--kernel", sim_kernel, "Generator kernel: local, constant, or linear");
    sim->add_option("--eta", sim_eta, "Generator look-ahead length in meters");

    auto* rec = app.add_subcommand("reconstruct", "Kernel-smooth trajectories onto the grid");
    rec->fallthrough();
    std::string rec_traj;
    rec->add_option("--trajectories", rec_traj, "Vehicle record file");

    auto* trn = app.add_subcommand("train", "Fit density, diagram, and kernel to observations");
    trn->fallthrough();
    std::string trn_kernel, trn_eta, trn_fd, trn_observed, trn_truth, trn_truth_v, trn_resume;
    std::optional<int> trn_adam, trn_lbfgs;
    trn->add_option("--kernel", trn_kernel,
                    "Trained kernel: learned, constant, linear, or local");
    trn->add_option("--eta", trn_eta, "Trained kernel support in meters");
    trn->add_option("--fd", trn_fd,
                    "Trained diagram: learned, greenshields, underwood, or drake");
    trn->add_option("--observed", trn_observed, "Field file to subsample into measurements");
    trn->add_option("--truth", trn_truth, "Ground-truth density for error metrics");
    trn->add_option("--truth-v", trn_truth_v, "Ground-truth speed for error metrics");
    trn->add_option("--adam-iters", trn_adam, "First-phase iteration count");
    trn->add_option("--lbfgs-iters", trn_lbfgs, "Second-phase iteration count");
    trn->add_option("--resume", trn_resume, "Checkpoint file to continue from");

    auto* evl = app.add_subcommand("evaluate", "Compare an estimated field against truth");
    evl->fallthrough();
    std::string evl_est, evl_truth, evl_est_v, evl_truth_v;
    evl->add_option("--estimate", evl_est, "Estimated density field");
    evl->add_option("--truth", evl_truth, "Reference density field");
    evl->add_option("--estimate-v", evl_est_v, "Estimated speed field");
    evl->add_option("--truth-v", evl_truth_v, "Reference speed field");

    auto* swp = app.add_subcommand("sweep", "Repeat training across kernel supports or weights");
    swp->fallthrough();
    std::string swp_etas, swp_alphas, swp_observed, swp_truth, swp_truth_v;
    swp->add_option("--etas", swp_etas, "Comma-separated kernel supports in meters");
    swp->add_option("--alphas", swp_alphas, "Comma-separated detector data weights");
    swp->add_option("--observed", swp_observed, "Field file to subsample into measurements");
    swp->add_option("--truth", swp_truth, "Ground-truth density for error metrics");
    swp->add_option("--truth-v", swp_truth_v, "Ground-truth speed for error metrics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        ExperimentConfig cfg =
            config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (seed_flag) cfg.seed = *seed_flag;
        if (!out_flag.empty()) cfg.out_dir = out_flag;
        if (jobs != 1)
            std::cerr << "note: --jobs " << jobs
                      << " requested; running single-threaded for bit-exact results\n";

        if (sim->parsed()) {
            if (!sim_kernel.empty()) cfg.solver_kernel = kernel_kind_from_name(sim_kernel);
            if (!sim_eta.empty()) {
                cfg.solver_eta_m = parse_double(sim_eta, "--eta");
                cfg.solver_eta_set = true;
            }
            return cmd_simulate(cfg);
        }
        if (rec->parsed()) {
            if (!rec_traj.empty()) cfg.trajectories = rec_traj;
            return cmd_reconstruct(cfg);
        }
        if (trn->parsed()) {
            if (!trn_kernel.empty()) cfg.train_kernel = kernel_kind_from_name(trn_kernel);
            if (!trn_eta.empty()) cfg.train_eta_m = parse_double(trn_eta, "--eta");
            if (!trn_fd.empty()) cfg.train_fd = fd_kind_from_name(trn_fd);
            if (!trn_observed.empty()) cfg.observed_rho = trn_observed;
            if (!trn_truth.empty()) cfg.truth_rho = trn_truth;
            if (!trn_truth_v.empty()) cfg.truth_v = trn_truth_v;
            if (trn_adam) cfg.adam_iters = *trn_adam;
            if (trn_lbfgs) cfg.lbfgs_iters = *trn_lbfgs;
            return cmd_train(cfg, trn_resume);
        }
        if (evl->parsed()) {
            if (!evl_est.empty()) cfg.estimate_rho = evl_est;
            if (!evl_truth.empty()) cfg.truth_rho = evl_truth;
            if (!evl_est_v.empty()) cfg.estimate_v = evl_est_v;
            if (!evl_truth_v.empty()) cfg.truth_v = evl_truth_v;
            return cmd_evaluate(cfg);
        }
        if (swp->parsed()) {
            if (!swp_observed.empty()) cfg.observed_rho = swp_observed;
            if (!swp_truth.empty()) cfg.truth_rho = swp_truth;
            if (!swp_truth_v.empty()) cfg.truth_v = swp_truth_v;
            std::vector<double> etas, alphas;
            if (!swp_etas.empty()) etas = parse_list_flag(swp_etas, "--etas");
            if (!swp_alphas.empty()) alphas = parse_list_flag(swp_alphas, "--alphas");
            return cmd_sweep(cfg, etas, alphas);
        }
        throw ConfigError("no subcommand given");
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
