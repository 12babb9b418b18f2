#include "ringlwr/config.hpp"

#include <charconv>
#include <set>
#include <sstream>
#include <utility>

#include "ringlwr/errors.hpp"
#include "ringlwr/field_io.hpp"
#include "ringlwr/kernel.hpp"

namespace ringlwr {

KernelKind kernel_kind_from_name(std::string_view name) {
    if (name == "local") return KernelKind::Local;
    if (name == "constant") return KernelKind::Constant;
    if (name == "linear") return KernelKind::Linear;
    if (name == "learned") return KernelKind::Learned;
    throw ConfigError("unknown kernel kind '" + std::string(name) +
                      "' (expected local, constant, linear, or learned)");
}

std::string kernel_kind_name(KernelKind k) {
    switch (k) {
    case KernelKind::Local: return "local";
    case KernelKind::Constant: return "constant";
    case KernelKind::Linear: return "linear";
    case KernelKind::Learned: return "learned";
    }
    throw ConfigError("invalid kernel kind");
}

FdKind fd_kind_from_name(std::string_view name) {
    if (name == "learned") return FdKind::Learned;
    switch (fd_variant_from_name(name)) {
    case FdVariant::Greenshields: return FdKind::Greenshields;
    case FdVariant::Underwood: return FdKind::Underwood;
    case FdVariant::Drake: return FdKind::Drake;
    }
    throw ConfigError("unknown fundamental diagram kind '" + std::string(name) + "'");
}

std::string fd_kind_name(FdKind k) {
    switch (k) {
    case FdKind::Greenshields: return fd_variant_name(FdVariant::Greenshields);
    case FdKind::Underwood: return fd_variant_name(FdVariant::Underwood);
    case FdKind::Drake: return fd_variant_name(FdVariant::Drake);
    case FdKind::Learned: return "learned";
    }
    throw ConfigError("invalid fundamental diagram kind");
}

RingGrid ExperimentConfig::grid() const {
    return RingGrid::from_extent(ring_length_m, dt_s, dx_m, horizon_s);
}

double ExperimentConfig::effective_train_eta() const {
    return train_eta_m > 0.0 ? train_eta_m : solver_eta_m;
}

double ExperimentConfig::effective_rho_scale() const {
    return rho_scale_vpm > 0.0 ? rho_scale_vpm : solver_fd.rho_m;
}

double ExperimentConfig::effective_v_scale() const {
    return v_scale_mps > 0.0 ? v_scale_mps : solver_fd.v_f;
}

void ExperimentConfig::validate_grid() const {
    grid(); // throws with field names on bad extents
}

void ExperimentConfig::validate_solver() const {
    solver_fd.validate();
    if (solver_kernel == KernelKind::Learned)
        throw ConfigError("solver.kernel must be local, constant, or linear; "
                          "only training can use a learned kernel");
    if (solver_kernel != KernelKind::Local) {
        if (!solver_eta_set)
            throw ConfigError("solver.eta_m is required when solver.kernel is nonlocal");
        kernel_cell_count(solver_eta_m, dx_m); // eta must be a multiple of dx
    }
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
        throw ConfigError("solver.cfl_safety must be in (0, 1]");
    if (init_rho_bar_vpm < 0.0 || init_amplitude_vpm < 0.0)
        throw ConfigError("solver initial profile parameters must be non-negative");
    if (init_rho_bar_vpm - init_amplitude_vpm < 0.0)
        throw ConfigError("solver.init_amplitude_vpm exceeds init_rho_bar_vpm; "
                          "the initial profile would be negative");
    if (n_vehicles < 1) throw ConfigError("solver.n_vehicles must be at least 1");
}

void ExperimentConfig::validate_kde() const {
    if (!(bandwidth_x_m > 0.0) || !(bandwidth_t_s > 0.0))
        throw ConfigError("kde bandwidths must be positive");
}

void ExperimentConfig::validate_training() const {
    solver_fd.validate(); // fixed diagrams and the scale defaults read it
    if (density_hidden_layers < 1 || density_hidden_width < 1 ||
        fd_hidden_layers < 1 || fd_hidden_width < 1)
        throw ConfigError("training network sizes must be at least 1");
    if (adam_iters < 0 || lbfgs_iters < 0)
        throw ConfigError("training iteration counts must be non-negative");
    if (!(adam_lr > 0.0)) throw ConfigError("training.adam_lr must be positive");
    if (alpha_initial < 0.0) throw ConfigError("training.alpha_initial must be non-negative");
    for (double a : alpha_detector)
        if (a < 0.0) throw ConfigError("training.alpha_detector entries must be non-negative");
    if (!alpha_detector.empty() && alpha_detector.size() != 1 &&
        alpha_detector.size() != static_cast<std::size_t>(n_detectors))
        throw ConfigError("training.alpha_detector needs 1 entry or one per detector");
    if (p_omega_1 < 0.0 || p_omega_2 < 0.0 || p_v_1 < 0.0 || p_v_2 < 0.0)
        throw ConfigError("training penalty coefficients must be non-negative");
    if (n_collocation < 1) throw ConfigError("training.n_collocation must be at least 1");
    if (n_detectors < 1) throw ConfigError("training.n_detectors must be at least 1");
    if (n_rho_grid < 2) throw ConfigError("training.n_rho_grid must be at least 2");
    if (checkpoint_every < 0) throw ConfigError("training.checkpoint_every must be non-negative");
    if (train_kernel != KernelKind::Local) {
        if (!(effective_train_eta() > 0.0))
            throw ConfigError("training.eta_m is required when training.kernel is nonlocal");
        kernel_cell_count(effective_train_eta(), dx_m);
    }
    for (double e : sweep_etas) {
        if (!(e > 0.0)) throw ConfigError("training.sweep_etas entries must be positive");
        kernel_cell_count(e, dx_m);
    }
    for (double a : sweep_alphas)
        if (a < 0.0) throw ConfigError("training.sweep_alphas entries must be non-negative");
}

void ExperimentConfig::validate() const {
    validate_grid();
    validate_solver();
    validate_kde();
    validate_training();
}

std::uint64_t ExperimentConfig::require_seed() const {
    if (!seed)
        throw ConfigError("training.seed is required (set it in the config or pass --seed)");
    return *seed;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<double> parse_double_list(std::string_view value, const std::string& where) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        std::string_view item =
            trim(value.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (item.empty()) throw ConfigError(where + ": empty list entry");
        out.push_back(parse_double(item, where));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::uint64_t parse_seed(std::string_view value, const std::string& where) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError(where + ": expected an unsigned 64-bit integer, got '" +
                          std::string(value) + "'");
    return v;
}

struct Parser {
    ExperimentConfig& cfg;
    const std::string& name;
    std::string section;
    std::set<std::string> seen;

    std::string where(std::string_view key) const {
        return name + ": [" + section + "] " + std::string(key);
    }

    void assign(std::string_view key, std::string_view value) {
        std::string full = section + "." + std::string(key);
        if (!seen.insert(full).second)
            throw ConfigError(name + ": duplicate key '" + full + "'");
        const std::string w = where(key);
        auto num = [&] { return parse_double(value, w); };
        auto integer = [&] { return static_cast<int>(parse_int(value, w)); };

        if (section == "grid") {
            if (key == "ring_length_m") cfg.ring_length_m = num();
            else if (key == "dx_m") cfg.dx_m = num();
            else if (key == "dt_s") cfg.dt_s = num();
            else if (key == "horizon_s") cfg.horizon_s = num();
            else throw ConfigError(name + ": unknown key '" + full + "'");
        } else if (section == "solver") {
            if (key == "fd") cfg.solver_fd.variant = fd_variant_from_name(value);
            else if (key == "v_f_mps") cfg.solver_fd.v_f = num();
            else if (key == "rho_m_vpm") cfg.solver_fd.rho_m = num();
            else if (key == "rho_c_vpm") cfg.solver_fd.rho_c = num();
            else if (key == "kernel") cfg.solver_kernel = kernel_kind_from_name(value);
            else if (key == "eta_m") { cfg.solver_eta_m = num(); cfg.solver_eta_set = true; }
            else if (key == "cfl_safety") cfg.cfl_safety = num();
            else if (key == "init_rho_bar_vpm") cfg.init_rho_bar_vpm = num();
            else if (key == "init_amplitude_vpm") cfg.init_amplitude_vpm = num();
            else if (key == "n_vehicles") cfg.n_vehicles = integer();
            else throw ConfigError(name + ": unknown key '" + full + "'");
        } else if (section == "kde") {
            if (key == "bandwidth_x_m") cfg.bandwidth_x_m = num();
            else if (key == "bandwidth_t_s") cfg.bandwidth_t_s = num();
            else throw ConfigError(name + ": unknown key '" + full + "'");
        } else if (section == "training") {
            if (key == "fd") cfg.train_fd = fd_kind_from_name(value);
            else if (key == "kernel") cfg.train_kernel = kernel_kind_from_name(value);
            else if (key == "eta_m") cfg.train_eta_m = num();
            else if (key == "density_hidden_layers") cfg.density_hidden_layers = integer();
            else if (key == "density_hidden_width") cfg.density_hidden_width = integer();
            else if (key == "fd_hidden_layers") cfg.fd_hidden_layers = integer();
            else if (key == "fd_hidden_width") cfg.fd_hidden_width = integer();
            else if (key == "rho_scale_vpm") cfg.rho_scale_vpm = num();
            else if (key == "v_scale_mps") cfg.v_scale_mps = num();
            else if (key == "adam_iters") cfg.adam_iters = integer();
            else if (key == "lbfgs_iters") cfg.lbfgs_iters = integer();
            else if (key == "adam_lr") cfg.adam_lr = num();
            else if (key == "alpha_initial") cfg.alpha_initial = num();
            else if (key == "alpha_detector") cfg.alpha_detector = parse_double_list(value, w);
            else if (key == "p_omega_1") cfg.p_omega_1 = num();
            else if (key == "p_omega_2") cfg.p_omega_2 = num();
            else if (key == "p_v_1") cfg.p_v_1 = num();
            else if (key == "p_v_2") cfg.p_v_2 = num();
            else if (key == "n_collocation") cfg.n_collocation = integer();
            else if (key == "n_detectors") cfg.n_detectors = integer();
            else if (key == "n_rho_grid") cfg.n_rho_grid = integer();
            else if (key == "seed") cfg.seed = parse_seed(value, w);
            else if (key == "checkpoint_every") cfg.checkpoint_every = integer();
            else if (key == "sweep_etas") cfg.sweep_etas = parse_double_list(value, w);
            else if (key == "sweep_alphas") cfg.sweep_alphas = parse_double_list(value, w);
            else throw ConfigError(name + ": unknown key '" + full + "'");
        } else if (section == "paths") {
            std::string v(value);
            if (key == "out_dir") cfg.out_dir = std::move(v);
            else if (key == "trajectories") cfg.trajectories = std::move(v);
            else if (key == "observed_rho") cfg.observed_rho = std::move(v);
            else if (key == "truth_rho") cfg.truth_rho = std::move(v);
            else if (key == "truth_v") cfg.truth_v = std::move(v);
            else if (key == "estimate_rho") cfg.estimate_rho = std::move(v);
            else if (key == "estimate_v") cfg.estimate_v = std::move(v);
            else throw ConfigError(name + ": unknown key '" + full + "'");
        } else {
            throw ConfigError(name + ": unknown section '[" + section + "]'");
        }
    }
};

} // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& name) {
    ExperimentConfig cfg;
    Parser parser{cfg, name, "", {}};
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view raw =
            text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(name + ":" + std::to_string(line_no) +
                                  ": malformed section header");
            parser.section = std::string(trim(line.substr(1, line.size() - 2)));
            if (parser.section.empty())
                throw ConfigError(name + ":" + std::to_string(line_no) + ": empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(name + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        std::string_view key = trim(line.substr(0, eq));
        std::string_view value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(name + ":" + std::to_string(line_no) + ": empty key");
        if (parser.section.empty())
            throw ConfigError(name + ":" + std::to_string(line_no) +
                              ": key before any [section] header");
        parser.assign(key, value);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_text_file(path), path);
}

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    auto kv = [&](std::string_view key, const std::string& value) {
        out << key << " = " << value << "\n";
    };
    auto kd = [&](std::string_view key, double value) { kv(key, format_double(value)); };
    auto ki = [&](std::string_view key, int value) { kv(key, std::to_string(value)); };
    auto klist = [&](std::string_view key, const std::vector<double>& values) {
        if (values.empty()) return;
        std::string joined;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i > 0) joined += ",";
            joined += format_double(values[i]);
        }
        kv(key, joined);
    };

    out << "[grid]\n";
    kd("ring_length_m", cfg.ring_length_m);
    kd("dx_m", cfg.dx_m);
    kd("dt_s", cfg.dt_s);
    kd("horizon_s", cfg.horizon_s);

    out << "\n[solver]\n";
    kv("fd", fd_variant_name(cfg.solver_fd.variant));
    kd("v_f_mps", cfg.solver_fd.v_f);
    kd("rho_m_vpm", cfg.solver_fd.rho_m);
    kd("rho_c_vpm", cfg.solver_fd.rho_c);
    kv("kernel", kernel_kind_name(cfg.solver_kernel));
    if (cfg.solver_eta_set) kd("eta_m", cfg.solver_eta_m);
    kd("cfl_safety", cfg.cfl_safety);
    kd("init_rho_bar_vpm", cfg.init_rho_bar_vpm);
    kd("init_amplitude_vpm", cfg.init_amplitude_vpm);
    ki("n_vehicles", cfg.n_vehicles);

    out << "\n[kde]\n";
    kd("bandwidth_x_m", cfg.bandwidth_x_m);
    kd("bandwidth_t_s", cfg.bandwidth_t_s);

    out << "\n[training]\n";
    kv("fd", fd_kind_name(cfg.train_fd));
    kv("kernel", kernel_kind_name(cfg.train_kernel));
    if (cfg.train_eta_m > 0.0) kd("eta_m", cfg.train_eta_m);
    ki("density_hidden_layers", cfg.density_hidden_layers);
    ki("density_hidden_width", cfg.density_hidden_width);
    ki("fd_hidden_layers", cfg.fd_hidden_layers);
    ki("fd_hidden_width", cfg.fd_hidden_width);
    if (cfg.rho_scale_vpm > 0.0) kd("rho_scale_vpm", cfg.rho_scale_vpm);
    if (cfg.v_scale_mps > 0.0) kd("v_scale_mps", cfg.v_scale_mps);
    ki("adam_iters", cfg.adam_iters);
    ki("lbfgs_iters", cfg.lbfgs_iters);
    kd("adam_lr", cfg.adam_lr);
    kd("alpha_initial", cfg.alpha_initial);
    klist("alpha_detector", cfg.alpha_detector);
    kd("p_omega_1", cfg.p_omega_1);
    kd("p_omega_2", cfg.p_omega_2);
    kd("p_v_1", cfg.p_v_1);
    kd("p_v_2", cfg.p_v_2);
    ki("n_collocation", cfg.n_collocation);
    ki("n_detectors", cfg.n_detectors);
    ki("n_rho_grid", cfg.n_rho_grid);
    if (cfg.seed) kv("seed", std::to_string(*cfg.seed));
    ki("checkpoint_every", cfg.checkpoint_every);
    klist("sweep_etas", cfg.sweep_etas);
    klist("sweep_alphas", cfg.sweep_alphas);

    out << "\n[paths]\n";
    auto path = [&](std::string_view key, const std::string& value) {
        if (!value.empty()) kv(key, value);
    };
    path("out_dir", cfg.out_dir);
    path("trajectories", cfg.trajectories);
    path("observed_rho", cfg.observed_rho);
    path("truth_rho", cfg.truth_rho);
    path("truth_v", cfg.truth_v);
    path("estimate_rho", cfg.estimate_rho);
    path("estimate_v", cfg.estimate_v);
    return out.str();
}

} // namespace ringlwr
