// Drives the command-line binary end to end: every subcommand, the error
// exit codes, byte-level determinism, and checkpoint resume. The binary
// under test is argv[1].

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>

#include "ringlwr/config.hpp"
#include "ringlwr/eval.hpp"
#include "ringlwr/field_io.hpp"
#include "ringlwr/grid.hpp"
#include "test_util.hpp"

using namespace ringlwr;

namespace {

int g_checks = 0;
int g_failures = 0;
std::string g_cli;
std::string g_work;

void check(bool ok, const std::string& what) {
    ++g_checks;
    if (!ok) {
        ++g_failures;
        std::cerr << "[FAIL] " << what << "\n";
    }
}

int run(const std::string& args) {
    const std::string cmd = "'" + g_cli + "' " + args + " > '" + g_work +
                            "/stdout.txt' 2> '" + g_work + "/stderr.txt'";
    const int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc)) return 127;
    return WEXITSTATUS(rc);
}

std::string last_stdout() { return read_text_file(g_work + "/stdout.txt"); }

bool same_bytes(const std::string& a, const std::string& b) {
    return read_text_file(a) == read_text_file(b);
}

// The experiment description every scenario shares: a 100 m ring at 5 m
// cells over 10 s, a linear 20 m generator kernel, and nets small enough
// that each training run takes milliseconds.
ExperimentConfig base_cfg() {
    ExperimentConfig cfg;
    cfg.ring_length_m = 100.0;
    cfg.dx_m = 5.0;
    cfg.dt_s = 1.0;
    cfg.horizon_s = 10.0;
    cfg.solver_kernel = KernelKind::Linear;
    cfg.solver_eta_m = 20.0;
    cfg.solver_eta_set = true;
    cfg.n_vehicles = 12;
    cfg.bandwidth_x_m = 8.0;
    cfg.bandwidth_t_s = 2.0;
    cfg.train_eta_m = 20.0;
    cfg.density_hidden_layers = 1;
    cfg.density_hidden_width = 8;
    cfg.fd_hidden_layers = 1;
    cfg.fd_hidden_width = 8;
    cfg.adam_iters = 4;
    cfg.lbfgs_iters = 2;
    cfg.adam_lr = 1e-2;
    cfg.n_collocation = 16;
    cfg.n_detectors = 4;
    cfg.n_rho_grid = 20;
    cfg.seed = 2024;
    return cfg;
}

void check_simulate(const std::string& cfg_path, const std::string& sim_dir) {
    check(run("--config '" + cfg_path + "' --out '" + sim_dir + "' simulate") == 0,
          "simulate exits cleanly");
    Field rho = read_field(sim_dir + "/truth_rho.csv");
    Field v = read_field(sim_dir + "/truth_v.csv");
    check(rho.grid() == base_cfg().grid(), "simulated density lives on the configured grid");
    check(v.grid() == rho.grid(), "speed twin shares the grid");
    double m0 = 0.0, m1 = 0.0;
    for (int j = 0; j < rho.grid().n_x; ++j) {
        m0 += rho(0, j);
        m1 += rho(rho.grid().n_t - 1, j);
    }
    check(std::abs(m1 - m0) <= 1e-12 * m0, "simulate conserves vehicle mass");
    check(!read_text_file(sim_dir + "/trajectories.csv").empty(), "trajectories written");
    check(!read_text_file(sim_dir + "/config_effective.cfg").empty(), "config echo written");
}

void check_reconstruct(const std::string& cfg_path, const std::string& sim_dir,
                       const std::string& rec_dir) {
    check(run("--config '" + cfg_path + "' --out '" + rec_dir + "' reconstruct --trajectories '" +
              sim_dir + "/trajectories.csv'") == 0,
          "reconstruct exits cleanly");
    Field rho = read_field(rec_dir + "/recon_rho.csv");
    Field v = read_field(rec_dir + "/recon_v.csv");
    const RingGrid& g = rho.grid();
    // At an interior time the smoothed density integrates to roughly the
    // vehicle count; edge truncation costs a fraction of a percent.
    double mass = 0.0;
    for (int j = 0; j < g.n_x; ++j) mass += rho(5, j) * g.dx_m;
    check(std::abs(mass - 12.0) <= 0.6, "smoothed density integrates to the fleet size");
    bool speeds_ok = true;
    for (double s : v.values())
        if (!std::isfinite(s) || s < 0.0 || s > 30.0) speeds_ok = false;
    check(speeds_ok, "reconstructed speeds stay within the diagram's range");
}

void check_evaluate(const std::string& sim_dir, const std::string& eval_dir) {
    check(run("--out '" + eval_dir + "' evaluate --estimate '" + sim_dir +
              "/truth_rho.csv' --truth '" + sim_dir + "/truth_rho.csv'") == 0,
          "evaluate exits cleanly");
    check(last_stdout() == "e_rho_pct = 0\n", "identical fields score zero error");
    check(read_text_file(eval_dir + "/eval_summary.txt") == "e_rho_pct = 0\n",
          "evaluate writes its summary");

    Field zero(base_cfg().grid(), 0.0);
    write_field(g_work + "/zero.csv", zero, "veh/m");
    check(run("evaluate --estimate '" + sim_dir + "/truth_rho.csv' --truth '" + g_work +
              "/zero.csv'") == 3,
          "an identically zero reference is a numeric error");
}

void check_train(const std::string& cfg_path, const std::string& sim_dir) {
    const std::string t1 = g_work + "/train_oneshot";
    const std::string common = " train --observed '" + sim_dir + "/truth_rho.csv' --truth '" +
                               sim_dir + "/truth_rho.csv' --truth-v '" + sim_dir +
                               "/truth_v.csv'";
    check(run("--config '" + cfg_path + "' --out '" + t1 + "'" + common) == 0,
          "train exits cleanly");
    check(last_stdout().find("[train] final loss ") != std::string::npos,
          "train reports its final loss");
    for (const char* f : {"/report/summary.txt", "/report/field_est.csv", "/report/kernel.csv",
                          "/report/fd_curve.csv", "/report/loss_trace.csv", "/checkpoint.txt"})
        check(!read_text_file(t1 + f).empty(), std::string("train writes ") + f);
    check(read_text_file(t1 + "/report/summary.txt").find("e_rho_pct = ") != std::string::npos,
          "summary carries the density error");

    // Same config, same seed, fresh directory: the whole bundle must match
    // byte for byte.
    const std::string t2 = g_work + "/train_repeat";
    check(run("--config '" + cfg_path + "' --out '" + t2 + "'" + common) == 0,
          "repeat train exits cleanly");
    for (const char* f : {"/report/summary.txt", "/report/field_est.csv", "/report/kernel.csv",
                          "/report/loss_trace.csv"})
        check(same_bytes(t1 + f, t2 + f), std::string("deterministic rerun: ") + f);

    // Stopping after the first phase and resuming must land on the exact
    // bytes of the uninterrupted run.
    const std::string t3 = g_work + "/train_resumed";
    check(run("--config '" + cfg_path + "' --out '" + t3 + "'" + common +
              " --lbfgs-iters 0") == 0,
          "first-phase-only train exits cleanly");
    check(run("--config '" + cfg_path + "' --out '" + t3 + "'" + common + " --resume '" + t3 +
              "/checkpoint.txt'") == 0,
          "resumed train exits cleanly");
    for (const char* f : {"/report/summary.txt", "/report/field_est.csv", "/report/kernel.csv",
                          "/report/loss_trace.csv"})
        check(same_bytes(t1 + f, t3 + f), std::string("resume matches one-shot: ") + f);
}

void check_sweep(const std::string& cfg_path, const std::string& sim_dir) {
    const std::string s1 = g_work + "/sweep";
    const std::string common = " sweep --observed '" + sim_dir + "/truth_rho.csv' --truth '" +
                               sim_dir + "/truth_rho.csv'";
    check(run("--config '" + cfg_path + "' --out '" + s1 + "'" + common + " --etas 20,7") == 0,
          "sweep tolerates one failing support");
    const std::string table = read_text_file(s1 + "/sweep_etas.csv");
    check(table.find(",ok,") != std::string::npos, "sweep table has the good support");
    check(table.find(",failed,") != std::string::npos, "sweep table records the bad support");

    check(run("--config '" + cfg_path + "' --out '" + s1 + "'" + common + " --etas 7") == 3,
          "a sweep with no surviving run is a numeric error");
    check(run("--config '" + cfg_path + "' --out '" + s1 + "'" + common +
              " --etas 20 --alphas 1") == 2,
          "mixing sweep axes is a config error");
}

void check_error_codes(const std::string& cfg_path) {
    check(run("--config '" + cfg_path + "' simulate --definitely-not-a-flag x") == 2,
          "unknown flags exit 2");
    check(run("--config '" + cfg_path + "'") == 2, "a missing subcommand exits 2");
    check(run("--config '" + cfg_path + "' simulate") == 2,
          "simulate without an output directory exits 2");
    check(run("--config '" + g_work + "/no-such-file.cfg' simulate") == 2,
          "a missing config file exits 2");
    write_text_file(g_work + "/bad.cfg", "[grid]\nbogus = 1\n");
    check(run("--config '" + g_work + "/bad.cfg' --out '" + g_work + "/x' simulate") == 2,
          "an unknown config key exits 2");
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: ringlwr_cli_check <path-to-cli-binary>\n";
        return 1;
    }
    g_cli = argv[1];
    ringlwr_test::TempDir work;
    g_work = work.path.string();

    const std::string cfg_path = g_work + "/exp.cfg";
    write_text_file(cfg_path, render_config(base_cfg()));
    const std::string sim_dir = g_work + "/sim";

    check_simulate(cfg_path, sim_dir);
    check_reconstruct(cfg_path, sim_dir, g_work + "/rec");
    check_evaluate(sim_dir, g_work + "/eval");
    check_train(cfg_path, sim_dir);
    check_sweep(cfg_path, sim_dir);
    check_error_codes(cfg_path);

    std::cout << "[cli_check] " << (g_checks - g_failures) << "/" << g_checks
              << " checks passed\n";
    return g_failures == 0 ? 0 : 1;
}
