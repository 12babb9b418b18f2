#ifndef RINGLWR_FD_HPP
#define RINGLWR_FD_HPP

#include <string>
#include <string_view>

#include "ringlwr/errors.hpp"

namespace ringlwr {

enum class FdVariant { Greenshields, Underwood, Drake };

FdVariant fd_variant_from_name(std::string_view name);
std::string fd_variant_name(FdVariant v);

/// Closed-form speed-density law. rho_m applies to Greenshields, rho_c to
/// Underwood and Drake; the irrelevant parameter is ignored.
struct FdParams {
    FdVariant variant = FdVariant::Greenshields;
    double v_f = 30.0;    // m/s
    double rho_m = 0.2;   // veh/m
    double rho_c = 0.08;  // veh/m

    /// Throws ConfigError when v_f or the variant's density parameter is
    /// not positive.
    void validate() const;
};

/// V(rho). Greenshields is clamped to 0 beyond rho_m so the law stays
/// non-negative; negative rho is rejected.
double fd_eval(const FdParams& params, double rho);

/// dV/drho, analytic; 0 in the Greenshields clamped region.
double fd_deriv(const FdParams& params, double rho);

/// d2V/drho2, analytic; 0 in the Greenshields clamped region.
double fd_curv(const FdParams& params, double rho);

} // namespace ringlwr

#endif
