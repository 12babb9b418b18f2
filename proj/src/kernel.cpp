#include "ringlwr/kernel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ringlwr/field_io.hpp"

namespace ringlwr {

void DiscreteKernel::validate() const {
    if (weights.empty()) throw DegenerateKernelError("kernel has no cells");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) {
            throw DegenerateKernelError("kernel weight " + format_double(w) +
                                        " is negative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw DegenerateKernelError("kernel weights sum to " + format_double(sum) +
                                    ", expected 1");
    }
}

int kernel_cell_count(double eta_m, double dx_m) {
    if (!(eta_m > 0.0) || !(dx_m > 0.0)) {
        throw ConfigError("eta_m and dx_m must be positive");
    }
    double n_real = eta_m / dx_m;
    int n = static_cast<int>(std::llround(n_real));
    if (n < 1 || std::abs(n * dx_m - eta_m) > 1e-9 * eta_m) {
        throw ConfigError("eta_m must be a positive integer multiple of dx_m (eta=" +
                          format_double(eta_m) + ", dx=" + format_double(dx_m) + ")");
    }
    return n;
}

DiscreteKernel kernel_constant(double eta_m, double dx_m) {
    int n = kernel_cell_count(eta_m, dx_m);
    DiscreteKernel k{eta_m, dx_m, std::vector<double>(n, dx_m / eta_m)};
    return k;
}

DiscreteKernel kernel_linear(double eta_m, double dx_m) {
    int n = kernel_cell_count(eta_m, dx_m);
    DiscreteKernel k{eta_m, dx_m, std::vector<double>(n)};
    double inv_eta2 = 1.0 / (eta_m * eta_m);
    for (int i = 0; i < n; ++i) {
        double a = eta_m - i * dx_m;
        double b = eta_m - (i + 1) * dx_m;
        k.weights[i] = (a * a - b * b) * inv_eta2;
    }
    return k;
}

DiscreteKernel kernel_normalize(const std::vector<double>& theta_omega,
                                double eta_m, double dx_m) {
    int n = kernel_cell_count(eta_m, dx_m);
    if (static_cast<int>(theta_omega.size()) != n) {
        throw ShapeError("raw kernel vector has " +
                         std::to_string(theta_omega.size()) + " entries, grid needs " +
                         std::to_string(n));
    }
    double sum = 0.0;
    for (double v : theta_omega) sum += v;
    if (sum == 0.0 || !std::isfinite(sum)) {
        throw DegenerateKernelError("raw kernel vector sums to " + format_double(sum) +
                                    "; cannot normalize");
    }
    DiscreteKernel k{eta_m, dx_m, std::vector<double>(theta_omega.size())};
    for (std::size_t i = 0; i < theta_omega.size(); ++i) {
        k.weights[i] = theta_omega[i] / sum;
    }
    return k;
}

double kernel_mass_fraction(const DiscreteKernel& kernel, double cutoff_m) {
    if (cutoff_m > kernel.eta_m * (1.0 + 1e-12)) {
        throw ConfigError("mass-fraction cutoff exceeds kernel support");
    }
    double sum = 0.0;
    for (int k = 0; k < kernel.size(); ++k) {
        if ((k + 1) * kernel.dx_m <= cutoff_m + 1e-9 * kernel.dx_m) {
            sum += kernel.weights[k];
        }
    }
    return sum;
}

void write_kernel(const std::string& path, const DiscreteKernel& kernel) {
    std::ostringstream os;
    os << "# units: offset_m=m, weight=dimensionless; eta_m="
       << format_double(kernel.eta_m) << ", dx_m=" << format_double(kernel.dx_m)
       << "\n";
    os << "k,offset_m,weight\n";
    for (int k = 0; k < kernel.size(); ++k) {
        os << k << ',' << format_double(kernel.offset_m(k)) << ','
           << format_double(kernel.weights[k]) << '\n';
    }
    write_text_file(path, os.str());
}

DiscreteKernel read_kernel(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::string line;
    bool saw_header = false;
    std::vector<double> offsets, weights;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "k,offset_m,weight") {
                throw IoError(path + ": expected header 'k,offset_m,weight'");
            }
            saw_header = true;
            continue;
        }
        auto f = split_fields(line);
        if (f.size() != 3) throw IoError(path + ": expected 3 fields, got line '" + line + "'");
        long long k = parse_int(f[0], "k");
        if (k != static_cast<long long>(offsets.size())) {
            throw IoError(path + ": kernel rows must be consecutive from k=0");
        }
        offsets.push_back(parse_double(f[1], "offset_m"));
        weights.push_back(parse_double(f[2], "weight"));
    }
    if (weights.empty()) throw IoError(path + ": no kernel rows");
    double dx = weights.size() > 1 ? offsets[1] : 0.0;
    if (weights.size() == 1) {
        // Single-cell kernels carry no spacing information in the offsets;
        // treat the support as one cell of unknown width 0 replaced below.
        throw IoError(path + ": single-row kernel files are ambiguous; need >= 2 rows");
    }
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        if (offsets[k] != k * dx) {
            throw IoError(path + ": offsets off the uniform kernel grid");
        }
    }
    DiscreteKernel out{static_cast<double>(weights.size()) * dx, dx, weights};
    return out;
}

} // namespace ringlwr
