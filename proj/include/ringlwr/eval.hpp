#ifndef RINGLWR_EVAL_HPP
#define RINGLWR_EVAL_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ringlwr/grid.hpp"
#include "ringlwr/kernel.hpp"

namespace ringlwr {

/// Relative L2 error in percent, ||a - b|| / ||b|| * 100 over all cells.
/// The reference must have a nonzero norm for the metric to be defined.
double rel_l2_error_pct(const Field& estimate, const Field& truth);

/// Evaluates a continuous (t, x) function on every grid cell.
Field sample_field(const RingGrid& grid, const std::function<double(double, double)>& f);

/// Speed field v(t, x) = V(rho_eta(t, x)) implied by a density field, a
/// look-ahead kernel (nullopt = local evaluation), and a speed function.
Field speed_from_density(const Field& rho, const std::optional<DiscreteKernel>& kernel,
                         const std::function<double(double)>& fd_value);

/// One row of the training loss trace.
struct LossTraceRow {
    int iter = 0;
    double total = 0.0;
    double data = 0.0;
    double phy_dyn = 0.0;
    double phy_static = 0.0;
};

/// CSV with columns iter,loss_total,loss_data,loss_phy_d,loss_phy_s.
std::string render_loss_trace(const std::vector<LossTraceRow>& rows);
std::vector<LossTraceRow> parse_loss_trace(std::string_view text, const std::string& name);

/// CSV with columns rho,v_hat: n_rho + 1 samples spanning [0, rho_m].
std::string render_fd_curve(const std::function<double(double)>& fd_value, double rho_m,
                            int n_rho);

/// key = value lines, one per item, in the given order.
std::string render_summary(const std::vector<std::pair<std::string, std::string>>& items);

} // namespace ringlwr

#endif
