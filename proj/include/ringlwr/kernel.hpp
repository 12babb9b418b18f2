#ifndef RINGLWR_KERNEL_HPP
#define RINGLWR_KERNEL_HPP

#include <string>
#include <vector>

#include "ringlwr/errors.hpp"

namespace ringlwr {

/// Cell-integrated look-ahead kernel: weights[k] is the kernel mass over
/// [k*dx, (k+1)*dx) ahead of the evaluation cell. Validated kernels sum to 1
/// and are non-negative; normalized raw vectors only sum to 1.
struct DiscreteKernel {
    double eta_m = 0.0;
    double dx_m = 0.0;
    std::vector<double> weights;

    int size() const { return static_cast<int>(weights.size()); }
    /// Left edge of cell k, meters ahead of the evaluation point.
    double offset_m(int k) const { return k * dx_m; }

    /// Throws DegenerateKernelError unless weights are non-negative and sum
    /// to 1 within 1e-12.
    void validate() const;
};

/// Number of kernel cells; eta_m must be a positive integer multiple of dx_m.
int kernel_cell_count(double eta_m, double dx_m);

/// Uniform look-ahead: every weight is dx/eta.
DiscreteKernel kernel_constant(double eta_m, double dx_m);

/// Linearly decreasing look-ahead omega(x) = 2(eta-x)/eta^2, integrated per
/// cell: weights[k] = ((eta-k*dx)^2 - (eta-(k+1)*dx)^2) / eta^2.
DiscreteKernel kernel_linear(double eta_m, double dx_m);

/// Projects a raw trainable vector onto the simplex constraint sum = 1 by
/// dividing by its sum. Signs and ordering pass through untouched; a zero
/// sum aborts with DegenerateKernelError.
DiscreteKernel kernel_normalize(const std::vector<double>& theta_omega,
                                double eta_m, double dx_m);

/// Total weight of cells lying entirely within [0, cutoff_m].
double kernel_mass_fraction(const DiscreteKernel& kernel, double cutoff_m);

/// Delimited-text export, header `k,offset_m,weight`; values round-trip
/// bit-exactly through read_kernel.
void write_kernel(const std::string& path, const DiscreteKernel& kernel);
DiscreteKernel read_kernel(const std::string& path);

} // namespace ringlwr

#endif
