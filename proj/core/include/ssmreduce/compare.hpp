#pragma once

#include "ssmreduce/lsm.hpp"
#include "ssmreduce/ssm.hpp"
#include "ssmreduce/system.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ssmreduce {

/// Modal-derivative reduction: y = Theta x^2 and the resulting cubic oscillator.
struct MdModel {
    Eigen::VectorXd Theta;
    LsmModel model;                 // b12 = 0 by construction
    LsmCoefficients manifold;       // w20 = Theta, all other coefficients zero
    std::vector<std::string> warnings;
};

MdModel md_reduce(const ModalSystem& msys);
/// Damped x-equation restricted to y = Theta x^2 (for trajectory comparisons).
SsmModel md_damped_model(const ModalSystem& msys);

struct MdErrorRatios {
    double alpha_over_theta = 0.0;  // LSM x^2 coefficient over MD coefficient
    double gamma_over_alpha = 0.0;  // LSM xdot^2 coefficient over LSM x^2 coefficient
};
MdErrorRatios md_error_ratios(double omega, double omega_i);

/// Normal-form reduced model in the curvilinear coordinate u (a2 = 0).
LsmModel nf_reduce(const ModalSystem& msys);

struct Omega2Table {
    double lsm_nf = 0.0;
    double md = 0.0;
};
Omega2Table omega2_table(const ModalSystem& msys);

/// Per-method coefficients plus margin diagnostics.
nlohmann::json comparison_report(const ModalSystem& msys);
/// Rows "method, omega0, omega2, a2, a3, b12" with a header line.
std::string comparison_csv(const ModalSystem& msys);

}  // namespace ssmreduce
