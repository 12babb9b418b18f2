#include "ringlwr/fd.hpp"

#include <cmath>

namespace ringlwr {

FdVariant fd_variant_from_name(std::string_view name) {
    if (name == "greenshields") return FdVariant::Greenshields;
    if (name == "underwood") return FdVariant::Underwood;
    if (name == "drake") return FdVariant::Drake;
    throw ConfigError("unknown fundamental diagram '" + std::string(name) +
                      "' (expected greenshields, underwood, or drake)");
}

std::string fd_variant_name(FdVariant v) {
    switch (v) {
        case FdVariant::Greenshields: return "greenshields";
        case FdVariant::Underwood: return "underwood";
        case FdVariant::Drake: return "drake";
    }
    return "?";
}

void FdParams::validate() const {
    if (!(v_f > 0.0)) throw ConfigError("v_f must be positive");
    if (variant == FdVariant::Greenshields) {
        if (!(rho_m > 0.0)) throw ConfigError("rho_m must be positive");
    } else {
        if (!(rho_c > 0.0)) throw ConfigError("rho_c must be positive");
    }
}

namespace {

void check_rho(double rho) {
    if (!(rho >= 0.0)) throw NumericError("fundamental diagram evaluated at negative density");
}

} // namespace

double fd_eval(const FdParams& p, double rho) {
    check_rho(rho);
    switch (p.variant) {
        case FdVariant::Greenshields:
            return rho >= p.rho_m ? 0.0 : p.v_f * (1.0 - rho / p.rho_m);
        case FdVariant::Underwood:
            return p.v_f * std::exp(-rho / p.rho_c);
        case FdVariant::Drake: {
            double u = rho / p.rho_c;
            return p.v_f * std::exp(-0.5 * u * u);
        }
    }
    return 0.0;
}

double fd_deriv(const FdParams& p, double rho) {
    check_rho(rho);
    switch (p.variant) {
        case FdVariant::Greenshields:
            return rho >= p.rho_m ? 0.0 : -p.v_f / p.rho_m;
        case FdVariant::Underwood:
            return -p.v_f / p.rho_c * std::exp(-rho / p.rho_c);
        case FdVariant::Drake: {
            double u = rho / p.rho_c;
            return -p.v_f * u / p.rho_c * std::exp(-0.5 * u * u);
        }
    }
    return 0.0;
}

double fd_curv(const FdParams& p, double rho) {
    check_rho(rho);
    switch (p.variant) {
        case FdVariant::Greenshields:
            return 0.0;
        case FdVariant::Underwood:
            return p.v_f / (p.rho_c * p.rho_c) * std::exp(-rho / p.rho_c);
        case FdVariant::Drake: {
            double u = rho / p.rho_c;
            return p.v_f * (u * u - 1.0) / (p.rho_c * p.rho_c) *
                   std::exp(-0.5 * u * u);
        }
    }
    return 0.0;
}

} // namespace ringlwr
