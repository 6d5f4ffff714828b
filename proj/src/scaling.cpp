#include "qlbm/scaling.hpp"

#include "qlbm/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

namespace qlbm::scaling {

void ScalingParams::validate() const {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("scaling: beta must lie in (0, 1]");
    if (!(n_base > std::numbers::e)) throw InvalidInput("scaling: N_B must exceed e (log log N_B is undefined)");
    if (!(t_base > 0.0)) throw ConfigError("scaling: T_B must be positive");
    if (dim < 1 || dim > 3) throw ConfigError("scaling: dimension must be 1, 2 or 3");
}

double eta(double n_base, double beta, int dim) {
    const double l = std::log(n_base / std::pow(beta, dim));
    return n_base * beta * beta / (l * l);
}

double beta0(double n_base) { return std::log(n_base) / std::sqrt(n_base); }

double beta1(double n_base) {
    if (!(n_base > std::numbers::e)) throw InvalidInput("beta1: N_B must exceed e");
    const double l = std::log(n_base);
    return 2.0 * (l - std::log(l)) / std::sqrt(n_base);
}

double crossover_beta(double n_base, int dim) {
    if (eta(n_base, 1.0, dim) < 1.0) return std::numeric_limits<double>::quiet_NaN();
    // η increases with β while N_B/β^D > 1; bisect in log β.
    double llo = std::log(1e-300), lhi = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (llo + lhi);
        if (eta(n_base, std::exp(mid), dim) < 1.0)
            llo = mid;
        else
            lhi = mid;
    }
    return std::exp(0.5 * (llo + lhi));
}

double crossover_sites(double beta) {
    if (!(beta > 0.0) || beta >= beta1(std::exp(1.0 + 1e-12)))
        throw InvalidInput("crossover_sites: beta outside the range of beta1");
    double lo = 1.0 + 1e-12, hi = 700.0;  // in log N_B
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (beta1(std::exp(mid)) > beta)
            lo = mid;
        else
            hi = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

ScalingReport diffusive_scaling(const ScalingParams& p) {
    p.validate();
    ScalingReport r;
    r.params = p;
    const double b = p.beta;
    r.cs_factor = 1.0 / b;
    r.u_lattice_factor = b;
    r.pressure_factor = 1.0 / (b * b);
    r.n_scaled = p.n_base / std::pow(b, p.dim);
    r.t_scaled = p.t_base / (b * b);
    r.classical_base = p.t_base * p.n_base;
    r.classical_scaled = r.t_scaled * r.n_scaled;
    const double lb = std::log(p.n_base);
    const double ls = std::log(r.n_scaled);
    r.quantum_base = lb * lb * p.t_base;
    r.quantum_scaled = ls * ls * r.t_scaled;
    r.eta = r.classical_base / r.quantum_scaled;
    r.beta0 = beta0(p.n_base);
    r.beta1 = beta1(p.n_base);
    r.beta_crossover = crossover_beta(p.n_base, p.dim);
    return r;
}

void write_scaling_csv(const std::string& path, const ScalingReport& r) {
    const std::filesystem::path fp(path);
    if (fp.has_parent_path()) std::filesystem::create_directories(fp.parent_path());
    std::ofstream os(fp);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(12);
    os << "beta,n_base,t_base,dim,cs_factor,u_lattice_factor,pressure_factor,n_scaled,t_scaled,"
          "classical_base,classical_scaled,quantum_base,quantum_scaled,eta,beta0,beta1,beta_crossover\n";
    os << r.params.beta << ',' << r.params.n_base << ',' << r.params.t_base << ',' << r.params.dim << ','
       << r.cs_factor << ',' << r.u_lattice_factor << ',' << r.pressure_factor << ',' << r.n_scaled << ','
       << r.t_scaled << ',' << r.classical_base << ',' << r.classical_scaled << ',' << r.quantum_base << ','
       << r.quantum_scaled << ',' << r.eta << ',' << r.beta0 << ',' << r.beta1 << ',' << r.beta_crossover << '\n';
}

} // namespace qlbm::scaling
