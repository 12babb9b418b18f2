#include "ringlwr/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "ringlwr/fd.hpp"
#include "ringlwr/field_io.hpp"
#include "ringlwr/optim.hpp"
#include "ringlwr/rng.hpp"

namespace fs = std::filesystem;

namespace ringlwr {

std::optional<DiscreteKernel> solver_kernel(const ExperimentConfig& cfg) {
    switch (cfg.solver_kernel) {
    case KernelKind::Local: return std::nullopt;
    case KernelKind::Constant: return kernel_constant(cfg.solver_eta_m, cfg.dx_m);
    case KernelKind::Linear: return kernel_linear(cfg.solver_eta_m, cfg.dx_m);
    case KernelKind::Learned: break;
    }
    throw ConfigError("the generator cannot use a learned kernel");
}

TwinArtifacts simulate_twin(const ExperimentConfig& cfg) {
    cfg.validate_grid();
    cfg.validate_solver();
    SolverConfig sc;
    sc.grid = cfg.grid();
    sc.fd = cfg.solver_fd;
    sc.kernel = solver_kernel(cfg);
    sc.initial_profile =
        twin_initial_profile(sc.grid, cfg.init_rho_bar_vpm, cfg.init_amplitude_vpm);
    sc.cfl_safety = cfg.cfl_safety;
    sc.validate();
    // Speeds never exceed v_f for non-negative density in any FD variant, so
    // one sub-step count is valid for the whole horizon.
    const int n_sub = required_substeps(sc.grid, cfg.solver_fd.v_f, cfg.cfl_safety);
    Field rho = simulate_substepped(sc, n_sub);
    const FdParams fd = cfg.solver_fd;
    Field v = speed_from_density(rho, sc.kernel, [fd](double r) { return fd_eval(fd, r); });
    return TwinArtifacts{std::move(sc), std::move(rho), std::move(v)};
}

namespace {

FdVariant variant_of(FdKind kind) {
    switch (kind) {
    case FdKind::Greenshields: return FdVariant::Greenshields;
    case FdKind::Underwood: return FdVariant::Underwood;
    case FdKind::Drake: return FdVariant::Drake;
    case FdKind::Learned: break;
    }
    throw ConfigError("no closed-form variant for a learned fundamental diagram");
}

} // namespace

PinnProblem build_problem(const ExperimentConfig& cfg, const Field& observed,
                          std::uint64_t seed) {
    cfg.validate_grid();
    cfg.validate_training();
    const RingGrid grid = cfg.grid();
    if (!(observed.grid() == grid))
        throw ConfigError("observed field grid does not match the configured grid");

    PinnProblem p;
    p.grid = grid;
    p.measurements =
        subsample_measurements(observed, evenly_spaced_detectors(cfg.n_detectors, grid.n_x));
    p.collocation = sample_collocation(grid, cfg.n_collocation, sub_seed(seed, "collocation"));

    p.weights.alpha_initial = cfg.alpha_initial;
    if (cfg.alpha_detector.empty())
        p.weights.alpha_detector.assign(static_cast<std::size_t>(cfg.n_detectors), 1.0);
    else if (cfg.alpha_detector.size() == 1)
        p.weights.alpha_detector.assign(static_cast<std::size_t>(cfg.n_detectors),
                                        cfg.alpha_detector[0]);
    else
        p.weights.alpha_detector = cfg.alpha_detector;
    p.weights.p_omega_1 = cfg.p_omega_1;
    p.weights.p_omega_2 = cfg.p_omega_2;
    p.weights.p_v_1 = cfg.p_v_1;
    p.weights.p_v_2 = cfg.p_v_2;

    p.density_hidden_layers = cfg.density_hidden_layers;
    p.density_hidden_width = cfg.density_hidden_width;
    p.rho_scale = cfg.effective_rho_scale();

    p.fd_hidden_layers = cfg.fd_hidden_layers;
    p.fd_hidden_width = cfg.fd_hidden_width;
    p.rho_m = cfg.solver_fd.rho_m;
    p.v_scale = cfg.effective_v_scale();
    if (cfg.train_fd == FdKind::Learned) {
        p.fd_mode = FdMode::Learned;
    } else {
        p.fd_mode = FdMode::Fixed;
        p.fixed_fd = cfg.solver_fd;
        p.fixed_fd.variant = variant_of(cfg.train_fd);
    }

    switch (cfg.train_kernel) {
    case KernelKind::Learned:
        p.kernel_mode = KernelMode::Learned;
        p.eta_m = cfg.effective_train_eta();
        break;
    case KernelKind::Constant:
        p.kernel_mode = KernelMode::Fixed;
        p.eta_m = cfg.effective_train_eta();
        p.fixed_kernel = kernel_constant(p.eta_m, cfg.dx_m);
        break;
    case KernelKind::Linear:
        p.kernel_mode = KernelMode::Fixed;
        p.eta_m = cfg.effective_train_eta();
        p.fixed_kernel = kernel_linear(p.eta_m, cfg.dx_m);
        break;
    case KernelKind::Local:
        // One cell of weight 1: the look-ahead average degenerates to the
        // cell's own density.
        p.kernel_mode = KernelMode::Fixed;
        p.eta_m = cfg.dx_m;
        p.fixed_kernel = DiscreteKernel{cfg.dx_m, cfg.dx_m, {1.0}};
        break;
    }

    p.n_rho_grid = cfg.n_rho_grid;
    p.validate();
    return p;
}

TrainSettings settings_from_config(const ExperimentConfig& cfg) {
    TrainSettings s;
    s.adam_iters = cfg.adam_iters;
    s.adam_lr = cfg.adam_lr;
    s.lbfgs_iters = cfg.lbfgs_iters;
    s.checkpoint_every = cfg.checkpoint_every;
    return s;
}

namespace {

std::string ckpt_line(std::istream& is, const std::string& name) {
    std::string line;
    if (!std::getline(is, line)) throw IoError(name + ": truncated checkpoint");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string ckpt_kv(std::istream& is, const std::string& key, const std::string& name) {
    std::string line = ckpt_line(is, name);
    const std::string prefix = key + "=";
    if (line.rfind(prefix, 0) != 0)
        throw IoError(name + ": expected '" + key + "=', got '" + line + "'");
    return line.substr(prefix.size());
}

void atomic_write(const std::string& path, std::string_view content) {
    const std::string tmp = path + ".tmp";
    write_text_file(tmp, content);
    fs::rename(tmp, path);
}

// A checkpoint always stays resumable: it records the phase, both progress
// counters, the parameters, and the live optimizer state (or `opt=none`
// at a phase boundary, where a continuous run would construct the next
// optimizer fresh anyway). Resuming reproduces the uninterrupted run
// bit for bit; raising the iteration budget extends the same run.
struct TrainState {
    std::string phase = "adam"; // adam | lbfgs
    int adam_done = 0;
    int lbfgs_done = 0;
    std::vector<double> params;
    std::optional<Adam> adam;
    std::optional<Lbfgs> lbfgs;
};

void write_checkpoint(const std::string& path, const TrainState& st) {
    std::ostringstream os;
    os << "ringlwr checkpoint v1\n";
    os << "phase=" << st.phase << '\n';
    os << "adam_done=" << st.adam_done << '\n';
    os << "lbfgs_done=" << st.lbfgs_done << '\n';
    os << "n=" << st.params.size() << '\n';
    for (double p : st.params) os << format_double(p) << '\n';
    if (st.adam) {
        os << "opt=adam\n";
        st.adam->save(os);
    } else if (st.lbfgs) {
        os << "opt=lbfgs\n";
        st.lbfgs->save(os);
    } else {
        os << "opt=none\n";
    }
    atomic_write(path, os.str());
}

TrainState read_checkpoint(const std::string& path, std::size_t expect_n) {
    const std::string text = read_text_file(path);
    std::istringstream is(text);
    if (ckpt_line(is, path) != "ringlwr checkpoint v1")
        throw IoError(path + ": unknown checkpoint version");
    TrainState st;
    st.phase = ckpt_kv(is, "phase", path);
    if (st.phase != "adam" && st.phase != "lbfgs")
        throw IoError(path + ": unknown phase '" + st.phase + "'");
    st.adam_done = static_cast<int>(parse_int(ckpt_kv(is, "adam_done", path), "adam_done"));
    st.lbfgs_done = static_cast<int>(parse_int(ckpt_kv(is, "lbfgs_done", path), "lbfgs_done"));
    const auto n = static_cast<std::size_t>(parse_int(ckpt_kv(is, "n", path), "n"));
    if (n != expect_n)
        throw IoError(path + ": checkpoint has " + std::to_string(n) +
                      " parameters, objective has " + std::to_string(expect_n));
    st.params.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        st.params[i] = parse_double(ckpt_line(is, path), "parameter");
    const std::string opt = ckpt_kv(is, "opt", path);
    if (opt == "adam")
        st.adam = Adam::load(is, path);
    else if (opt == "lbfgs")
        st.lbfgs = Lbfgs::load(is, path);
    else if (opt != "none")
        throw IoError(path + ": unknown optimizer block '" + opt + "'");
    return st;
}

} // namespace

TrainResult run_training(PinnLoss& loss, const TrainSettings& s) {
    if (s.adam_iters < 0 || s.lbfgs_iters < 0)
        throw ConfigError("iteration counts must be non-negative");
    if (s.trace_every < 1) throw ConfigError("trace_every must be at least 1");
    if (s.checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
    if (s.checkpoint_every > 0 && s.checkpoint_path.empty())
        throw ConfigError("checkpoint_every needs a checkpoint path");

    const std::size_t n = loss.param_count();
    TrainResult result;
    TrainState st;
    const bool resuming = !s.resume_from.empty();
    if (resuming) {
        st = read_checkpoint(s.resume_from, n);
        result.adam_done = st.adam_done;
        result.lbfgs_done = st.lbfgs_done;
        if (!s.trace_path.empty() && fs::exists(s.trace_path)) {
            const int global_done =
                st.adam_done + st.lbfgs_done; // lbfgs rows count from the adam base
            for (const LossTraceRow& r :
                 parse_loss_trace(read_text_file(s.trace_path), s.trace_path))
                if (r.iter <= global_done) result.trace.push_back(r);
        }
    } else {
        st.params = loss.initial_params();
    }
    std::vector<double>& params = st.params;

    auto push_trace = [&](int iter, const PinnLoss::Parts& parts) {
        LossTraceRow row{iter, parts.total, parts.data, parts.phy_dyn, parts.phy_static};
        if (!result.trace.empty() && result.trace.back().iter == iter)
            result.trace.back() = row;
        else
            result.trace.push_back(row);
    };
    auto flush_trace = [&] {
        if (!s.trace_path.empty()) atomic_write(s.trace_path, render_loss_trace(result.trace));
    };
    auto checkpoint = [&] {
        if (!s.checkpoint_path.empty()) {
            write_checkpoint(s.checkpoint_path, st);
            flush_trace();
        }
    };
    auto log_parts = [&](int iter, int total_planned, const PinnLoss::Parts& parts) {
        if (s.log)
            *s.log << "[train] iter " << iter << "/" << total_planned << " loss "
                   << format_double(parts.total) << " (data " << format_double(parts.data)
                   << ", dyn " << format_double(parts.phy_dyn) << ", static "
                   << format_double(parts.phy_static) << ")" << std::endl;
    };

    const int total_planned = s.adam_iters + s.lbfgs_iters;
    std::vector<double> grad(n, 0.0);

    // ADAM phase.
    if (st.phase == "adam") {
        if (st.adam_done < s.adam_iters) {
            if (s.log)
                *s.log << "[train] adam phase: iterations " << st.adam_done + 1 << ".."
                       << s.adam_iters << std::endl;
            PinnLoss::Parts parts = loss.eval(params, grad);
            if (!resuming) push_trace(0, parts);
            if (!st.adam) st.adam = Adam(AdamConfig{s.adam_lr, 0.9, 0.999, 1e-8}, n);
            for (int it = st.adam_done + 1; it <= s.adam_iters; ++it) {
                st.adam->step(params, grad);
                parts = loss.eval(params, grad);
                st.adam_done = it;
                result.adam_done = it;
                if (it % s.trace_every == 0 || it == s.adam_iters) push_trace(it, parts);
                if (s.log && (it % s.log_every == 0 || it == s.adam_iters))
                    log_parts(it, total_planned, parts);
                if (s.checkpoint_every > 0 && it % s.checkpoint_every == 0 &&
                    it != s.adam_iters)
                    checkpoint();
            }
        }
        // Boundary snapshot carries no optimizer state; resuming from it
        // builds L-BFGS fresh, exactly like the uninterrupted run.
        st.phase = "lbfgs";
        st.adam.reset();
        checkpoint();
    }

    // L-BFGS phase. Trace rows continue from the adam base.
    if (st.phase == "lbfgs" && st.lbfgs_done < s.lbfgs_iters) {
        const int base = st.adam_done;
        if (s.log)
            *s.log << "[train] lbfgs phase: iterations " << st.lbfgs_done + 1 << ".."
                   << s.lbfgs_iters << std::endl;
        if (!st.lbfgs) st.lbfgs = Lbfgs(LbfgsConfig{}, n);
        auto fn = [&loss](std::span<const double> p, std::span<double> g) {
            return loss.eval(p, g).total;
        };
        if (result.trace.empty())
            push_trace(base + st.lbfgs_done, loss.eval_loss(params));
        for (int it = st.lbfgs_done + 1; it <= s.lbfgs_iters; ++it) {
            const bool converged = st.lbfgs->step(params, fn);
            st.lbfgs_done = it;
            result.lbfgs_done = it;
            const bool last = converged || it == s.lbfgs_iters;
            if (it % s.trace_every == 0 || last)
                push_trace(base + it, loss.eval_loss(params));
            if (s.log && (it % s.log_every == 0 || last))
                log_parts(base + it, total_planned, loss.eval_loss(params));
            if (converged) {
                result.lbfgs_converged = true;
                if (s.log)
                    *s.log << "[train] lbfgs stopped after " << it << " iterations: "
                           << st.lbfgs->diagnostic() << std::endl;
                break;
            }
            if (s.checkpoint_every > 0 && it % s.checkpoint_every == 0) checkpoint();
        }
        result.lbfgs_diagnostic = st.lbfgs->diagnostic();
    }

    result.final_parts = loss.eval_loss(params);
    push_trace(result.adam_done + result.lbfgs_done, result.final_parts);
    checkpoint();
    flush_trace();
    result.params = std::move(st.params);
    return result;
}

ReportMetrics export_report(const std::string& report_dir, const ExperimentConfig& cfg,
                            PinnLoss& loss, const TrainResult& result,
                            const std::optional<Field>& truth_rho,
                            const std::optional<Field>& truth_v) {
    const bool to_files = !report_dir.empty();
    if (to_files) fs::create_directories(report_dir);
    const PinnProblem& problem = loss.problem();
    const RingGrid& grid = problem.grid;

    const DensityNetModel density = loss.density_at(result.params);
    Field est = sample_field(grid, [&](double t, double x) { return density.value(t, x); });
    const DiscreteKernel kernel = loss.kernel_at(result.params);
    auto fd_value = [&](double r) { return loss.fd_value_at(result.params, r); };

    ReportMetrics metrics;
    // The first 10 m of look-ahead mass; 1 by definition for shorter kernels.
    const double cutoff = std::min(10.0, kernel.eta_m);
    metrics.kernel_mass_frac_10m = kernel_mass_fraction(kernel, cutoff);
    if (truth_rho) metrics.e_rho_pct = rel_l2_error_pct(est, *truth_rho);
    if (truth_v) {
        Field v_est = speed_from_density(est, kernel, fd_value);
        metrics.e_v_pct = rel_l2_error_pct(v_est, *truth_v);
    }

    if (to_files) {
        write_field(report_dir + "/field_est.csv", est, "veh/m");
        write_kernel(report_dir + "/kernel.csv", kernel);
        write_text_file(report_dir + "/fd_curve.csv",
                        render_fd_curve(fd_value, problem.rho_m, problem.n_rho_grid));
        write_text_file(report_dir + "/loss_trace.csv", render_loss_trace(result.trace));

        std::vector<std::pair<std::string, std::string>> items;
        auto add = [&](std::string key, std::string value) {
            items.emplace_back(std::move(key), std::move(value));
        };
        if (metrics.e_rho_pct) add("e_rho_pct", format_double(*metrics.e_rho_pct));
        if (metrics.e_v_pct) add("e_v_pct", format_double(*metrics.e_v_pct));
        add("kernel_mass_frac_10m", format_double(*metrics.kernel_mass_frac_10m));
        add("loss_total", format_double(result.final_parts.total));
        add("loss_data", format_double(result.final_parts.data));
        add("loss_phy_d", format_double(result.final_parts.phy_dyn));
        add("loss_phy_s", format_double(result.final_parts.phy_static));
        add("adam_iters", std::to_string(result.adam_done));
        add("lbfgs_iters", std::to_string(result.lbfgs_done));
        add("lbfgs_converged", result.lbfgs_converged ? "1" : "0");
        add("eta_m", format_double(kernel.eta_m));
        add("n_params", std::to_string(result.params.size()));
        if (cfg.seed) add("seed", std::to_string(*cfg.seed));
        write_text_file(report_dir + "/summary.txt", render_summary(items));
    }
    return metrics;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const Field& observed,
                          const std::optional<Field>& truth_rho,
                          const std::optional<Field>& truth_v,
                          const std::string& report_dir, const TrainSettings& settings) {
    const std::uint64_t seed = cfg.require_seed();
    PinnProblem problem = build_problem(cfg, observed, seed);
    PinnLoss loss(std::move(problem), seed);
    TrainResult result = run_training(loss, settings);
    ReportMetrics metrics = export_report(report_dir, cfg, loss, result, truth_rho, truth_v);
    return RunOutcome{std::move(result), std::move(metrics)};
}

std::vector<EtaSweepRow> eta_sweep(const ExperimentConfig& cfg, const Field& observed,
                                   const std::optional<Field>& truth_rho,
                                   const std::optional<Field>& truth_v,
                                   const std::vector<double>& etas,
                                   const std::string& out_dir, std::ostream* log) {
    if (etas.empty()) throw ConfigError("eta sweep needs at least one support length");
    std::vector<EtaSweepRow> rows;
    for (double eta : etas) {
        EtaSweepRow row;
        row.eta_m = eta;
        if (log) *log << "[sweep] eta_m = " << format_double(eta) << std::endl;
        try {
            ExperimentConfig sub = cfg;
            sub.train_eta_m = eta;
            sub.validate_grid();
            sub.validate_training();
            TrainSettings settings = settings_from_config(sub);
            settings.checkpoint_every = 0; // sweep runs are not resumable
            settings.log = log;
            std::string report_dir;
            if (!out_dir.empty())
                report_dir = out_dir + "/eta_" + format_double(eta) + "/report";
            RunOutcome outcome =
                run_experiment(sub, observed, truth_rho, truth_v, report_dir, settings);
            row.ok = true;
            row.mass_frac_10m = outcome.metrics.kernel_mass_frac_10m.value_or(0.0);
            row.e_rho_pct = outcome.metrics.e_rho_pct.value_or(0.0);
            row.loss_total = outcome.result.final_parts.total;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
            if (log) *log << "[sweep] eta_m = " << format_double(eta) << " failed: "
                          << e.what() << std::endl;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

} // namespace

std::string render_eta_sweep(const std::vector<EtaSweepRow>& rows) {
    std::ostringstream os;
    os << "eta_m,status,mass_frac_10m,e_rho_pct,loss_total,error\n";
    for (const EtaSweepRow& r : rows) {
        os << format_double(r.eta_m) << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok)
            os << format_double(r.mass_frac_10m) << ',' << format_double(r.e_rho_pct) << ','
               << format_double(r.loss_total) << ',';
        else
            os << ",,,";
        os << csv_safe(r.error) << '\n';
    }
    return os.str();
}

std::vector<AlphaSweepRow> alpha_sweep(const ExperimentConfig& cfg, const Field& observed,
                                       const std::optional<Field>& truth_rho,
                                       const std::optional<Field>& truth_v,
                                       const std::vector<double>& alphas,
                                       const std::string& out_dir, std::ostream* log) {
    if (alphas.empty()) throw ConfigError("alpha sweep needs at least one weight");
    std::vector<AlphaSweepRow> rows;
    for (double alpha : alphas) {
        AlphaSweepRow row;
        row.alpha = alpha;
        if (log) *log << "[sweep] alpha = " << format_double(alpha) << std::endl;
        try {
            ExperimentConfig sub = cfg;
            sub.alpha_detector = {alpha};
            sub.validate_grid();
            sub.validate_training();
            TrainSettings settings = settings_from_config(sub);
            settings.checkpoint_every = 0; // sweep runs are not resumable
            settings.log = log;
            std::string report_dir;
            if (!out_dir.empty())
                report_dir = out_dir + "/alpha_" + format_double(alpha) + "/report";
            RunOutcome outcome =
                run_experiment(sub, observed, truth_rho, truth_v, report_dir, settings);
            row.ok = true;
            row.e_rho_pct = outcome.metrics.e_rho_pct.value_or(0.0);
            row.loss_total = outcome.result.final_parts.total;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
            if (log) *log << "[sweep] alpha = " << format_double(alpha) << " failed: "
                          << e.what() << std::endl;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string render_alpha_sweep(const std::vector<AlphaSweepRow>& rows) {
    std::ostringstream os;
    os << "alpha,status,e_rho_pct,loss_total,error\n";
    for (const AlphaSweepRow& r : rows) {
        os << format_double(r.alpha) << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok)
            os << format_double(r.e_rho_pct) << ',' << format_double(r.loss_total) << ',';
        else
            os << ",,";
        os << csv_safe(r.error) << '\n';
    }
    return os.str();
}

} // namespace ringlwr
