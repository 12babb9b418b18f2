#include "ringlwr/eval.hpp"

#include <cmath>
#include <sstream>

#include "ringlwr/errors.hpp"
#include "ringlwr/field_io.hpp"
#include "ringlwr/solver.hpp"

namespace ringlwr {

double rel_l2_error_pct(const Field& estimate, const Field& truth) {
    if (estimate.n_t() != truth.n_t() || estimate.n_x() != truth.n_x())
        throw ShapeError("field shape mismatch: estimate is " + std::to_string(estimate.n_t()) +
                         "x" + std::to_string(estimate.n_x()) + ", reference is " +
                         std::to_string(truth.n_t()) + "x" + std::to_string(truth.n_x()));
    const std::vector<double>& a = estimate.values();
    const std::vector<double>& b = truth.values();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double d = a[i] - b[i];
        num += d * d;
        den += b[i] * b[i];
    }
    if (den == 0.0)
        throw NumericError("relative error undefined: reference field is identically zero");
    return 100.0 * std::sqrt(num / den);
}

Field sample_field(const RingGrid& grid, const std::function<double(double, double)>& f) {
    Field out(grid);
    for (int i = 0; i < grid.n_t; ++i) {
        const double t = grid.time_at(i);
        double* row = out.row(i);
        for (int j = 0; j < grid.n_x; ++j) row[j] = f(t, grid.x_at(j));
    }
    return out;
}

Field speed_from_density(const Field& rho, const std::optional<DiscreteKernel>& kernel,
                         const std::function<double(double)>& fd_value) {
    const RingGrid& grid = rho.grid();
    if (kernel) {
        if (std::abs(kernel->dx_m - grid.dx_m) > 1e-12 * grid.dx_m)
            throw ConfigError("kernel cell width does not match the field grid");
        if (kernel->weights.size() > static_cast<std::size_t>(grid.n_x))
            throw ConfigError("kernel spans more cells than the ring holds");
    }
    Field out(grid);
    std::vector<double> eta_row(static_cast<std::size_t>(grid.n_x));
    for (int i = 0; i < grid.n_t; ++i) {
        const double* row = rho.row(i);
        double* vrow = out.row(i);
        if (kernel) {
            nonlocal_density(row, grid.n_x, *kernel, eta_row.data());
            for (int j = 0; j < grid.n_x; ++j) vrow[j] = fd_value(eta_row[j]);
        } else {
            for (int j = 0; j < grid.n_x; ++j) vrow[j] = fd_value(row[j]);
        }
    }
    return out;
}

std::string render_loss_trace(const std::vector<LossTraceRow>& rows) {
    std::ostringstream out;
    out << "iter,loss_total,loss_data,loss_phy_d,loss_phy_s\n";
    for (const LossTraceRow& r : rows)
        out << r.iter << ',' << format_double(r.total) << ',' << format_double(r.data) << ','
            << format_double(r.phy_dyn) << ',' << format_double(r.phy_static) << '\n';
    return out.str();
}

std::vector<LossTraceRow> parse_loss_trace(std::string_view text, const std::string& name) {
    std::vector<LossTraceRow> rows;
    std::size_t pos = 0;
    bool saw_header = false;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "iter,loss_total,loss_data,loss_phy_d,loss_phy_s")
                throw IoError(name + ": unexpected loss trace header '" + std::string(line) +
                              "'");
            saw_header = true;
            continue;
        }
        const std::string where = name + ":" + std::to_string(line_no);
        auto cells = split_fields(line);
        if (cells.size() != 5)
            throw IoError(where + ": expected 5 fields, got line '" + std::string(line) + "'");
        LossTraceRow r;
        r.iter = static_cast<int>(parse_int(cells[0], where));
        r.total = parse_double(cells[1], where);
        r.data = parse_double(cells[2], where);
        r.phy_dyn = parse_double(cells[3], where);
        r.phy_static = parse_double(cells[4], where);
        rows.push_back(r);
    }
    if (!saw_header) throw IoError(name + ": empty loss trace");
    return rows;
}

std::string render_fd_curve(const std::function<double(double)>& fd_value, double rho_m,
                            int n_rho) {
    if (!(rho_m > 0.0)) throw ConfigError("fd curve needs a positive maximum density");
    if (n_rho < 1) throw ConfigError("fd curve needs at least one interval");
    std::ostringstream out;
    out << "rho,v_hat\n";
    for (int i = 0; i <= n_rho; ++i) {
        const double rho = rho_m * static_cast<double>(i) / static_cast<double>(n_rho);
        out << format_double(rho) << ',' << format_double(fd_value(rho)) << '\n';
    }
    return out.str();
}

std::string render_summary(const std::vector<std::pair<std::string, std::string>>& items) {
    std::ostringstream out;
    for (const auto& [key, value] : items) out << key << " = " << value << '\n';
    return out.str();
}

} // namespace ringlwr
