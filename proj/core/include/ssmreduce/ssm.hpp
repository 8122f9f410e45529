#pragma once

#include "ssmreduce/lsm.hpp"
#include "ssmreduce/system.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace ssmreduce {

/// Quadratic SSM coefficients of one non-modeling mode; blocks are nu x nu.
struct SsmModeCoefficients {
    Eigen::MatrixXd W11, W12, W22;
    Eigen::MatrixXd Wt11, Wt12, Wt22;  // velocity manifold (chain rule)
    double wbar_sin = 0.0;
    double wbar_cos = 0.0;
    double det_margin = 0.0;  // |det L| / ||L||_F^3 (nu = 1) or sigma_min / sigma_max
    double residual = 0.0;    // relative defining-equation residual

    double w11() const { return W11(0, 0); }
    double w12() const { return W12(0, 0); }
    double w22() const { return W22(0, 0); }
    double wt11() const { return Wt11(0, 0); }
    double wt12() const { return Wt12(0, 0); }
    double wt22() const { return Wt22(0, 0); }
};

struct SsmCoefficients {
    int nu = 1;
    std::vector<SsmModeCoefficients> modes;  // enslaved modes in modal order
    std::vector<std::string> warnings;
};

struct SsmOptions {
    double singular_tol = 1e-10;   // hard failure
    double resonance_tol = 1e-3;   // warning threshold on the determinant margin
};

/// Periodic response amplitudes of Omega^2 W'' + 2 zeta_i omega_i Omega W' + omega_i^2 W = F sin(phi).
struct PeriodicCoefficient {
    double sin = 0.0;
    double cos = 0.0;
};

/// Closed-form 3x3 matrix L_i of the nu = 1 solve.
Eigen::Matrix3d ssm_L_matrix(double zeta, double omega, double zeta_i, double omega_i);
/// Closed-form determinant of L_i.
double ssm_det(double zeta, double omega, double zeta_i, double omega_i);
/// |det L| / ||L||_F^3 with L in units where omega = 1.
double ssm_det_margin(double zeta, double omega, double zeta_i, double omega_i);
PeriodicCoefficient ssm_periodic_coeff(double zeta_i, double omega_i, double Omega, double F);

SsmCoefficients ssm_coeffs_1dof(const ModalSystem& msys, const SsmOptions& opts = {});
/// Assembled symmetric-matrix solve; modal modes 1..nu-1 are promoted into the modeling block.
SsmCoefficients ssm_coeffs_general(const ModalSystem& msys, int nu, const SsmOptions& opts = {});

/// Manifold point in physical non-modeling coordinates (nu = 1).
std::pair<Eigen::VectorXd, Eigen::VectorXd> ssm_manifold_eval(const SsmCoefficients& coeffs,
                                                              const ModalSystem& msys, double x,
                                                              double xdot, double phi, double epsilon);
/// Same point in modal coordinates (eta, etadot).
std::pair<Eigen::VectorXd, Eigen::VectorXd> ssm_manifold_eval_modal(const SsmCoefficients& coeffs,
                                                                    const ModalSystem& msys, double x,
                                                                    double xdot, double phi, double epsilon);

/// m x'' + c x' + k x + quad + cubic = eps F1 sin(Omega t)
struct SsmModel {
    double m = 1.0, c = 0.0, k = 1.0;
    double x2 = 0.0, xxd = 0.0, xd2 = 0.0;
    std::array<double, 4> cubic_direct{};   // x^3, x^2 xd, x xd^2, xd^3
    std::array<double, 4> cubic_coupled{};
    double F1 = 0.0, Omega = 0.0, epsilon = 0.0;
    std::string provenance = "ssm";
    std::optional<SsmCoefficients> coefficients;

    double cubic(std::size_t i) const { return cubic_direct[i] + cubic_coupled[i]; }
    double omega0() const;
    double zeta() const;
};

SsmModel ssm_reduce(const ModalSystem& msys, const SsmOptions& opts = {});
/// Model with only linear and direct terms of the x-equation (y set to zero).
SsmModel truncated_x_equation(const ModalSystem& msys);
/// Linear part of the reduced model.
SsmModel linearized(const SsmModel& model);
/// Conservative-part view as an LSM-shaped model (a2, a3, b12 divided by m).
LsmModel conservative_part(const SsmModel& model);
/// Damped reduced model from an LSM-shaped one: adds linear damping and forcing.
SsmModel from_lsm_shaped(const LsmModel& model, double mass, double zeta, double F1, double Omega, double epsilon);

/// Relative defining-equation residual of one mode's quadratic solve.
double ssm_defining_residual(const ModalSystem& msys, int nu, std::size_t mode, const SsmModeCoefficients& c);

nlohmann::json to_json(const SsmModel& model);
SsmModel ssm_model_from_json(const nlohmann::json& j);

}  // namespace ssmreduce
