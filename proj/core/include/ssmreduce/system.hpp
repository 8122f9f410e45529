#pragma once

#include "ssmreduce/polynomial.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace ssmreduce {

struct Forcing {
    double F1 = 0.0;
    Eigen::VectorXd F2;
    double Omega = 0.0;
    double epsilon = 0.0;
};

/// Partitioned system
///   m x'' + c x' + k x + P = eps F1 sin(Omega t)
///   M y'' + C y' + K y + Q = eps F2 sin(Omega t)
struct MechanicalSystem {
    double m = 1.0;
    double c = 0.0;
    double k = 1.0;
    Eigen::MatrixXd M, C, K;
    NonlinearForm P;  // rows 1
    NonlinearForm Q;  // rows n
    Forcing forcing;
    /// Physical coordinates q = basis * [x; y] when the system came from decoupling.
    Eigen::MatrixXd basis;
    std::string provenance;

    std::size_t n() const { return static_cast<std::size_t>(M.rows()); }
    bool is_conservative() const;
};

/// Non-partitioned system M q'' + C q' + K q + F(q, q') = eps force sin(Omega t).
///
/// F uses the NonlinearForm layout with n = dofs and unused x, xdot slots.
struct FullSystem {
    Eigen::MatrixXd M, C, K;
    NonlinearForm F;
    Eigen::VectorXd force;
    double Omega = 0.0;
    double epsilon = 0.0;
    Eigen::VectorXd mode_shape;
    std::string provenance;

    std::size_t dofs() const { return static_cast<std::size_t>(M.rows()); }
};

/// Modal form
///   x'' + 2 zeta omega0 x' + omega0^2 x + R = eps Fhat1 sin(Omega t)
///   eta'' + diag(2 zeta_i omega_i) eta' + diag(omega_i^2) eta + S = eps Fhat2 sin(Omega t)
struct ModalSystem {
    double mass = 1.0;  // modal mass of x; R and Fhat1 carry the 1/mass factor
    double omega0 = 1.0;
    double zeta = 0.0;
    Eigen::VectorXd omega;
    Eigen::VectorXd zeta_vec;
    Eigen::MatrixXd Phi2;
    NonlinearForm R;
    NonlinearForm S;
    double Fhat1 = 0.0;
    Eigen::VectorXd Fhat2;
    double Omega = 0.0;
    double epsilon = 0.0;

    std::size_t n() const { return static_cast<std::size_t>(omega.size()); }
    bool is_conservative() const;
};

/// Potential energy over partitioned coordinates [x; y].
using PotentialFn = std::function<double(const Eigen::VectorXd&)>;

void validate(const MechanicalSystem& sys);
void validate(const FullSystem& sys);

MechanicalSystem system_from_json(const nlohmann::json& j);
FullSystem full_system_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MechanicalSystem& sys);
nlohmann::json to_json(const FullSystem& sys);
bool is_full_system_json(const nlohmann::json& j);

/// Loads a partitioned system; full systems carrying a mode shape are decoupled.
MechanicalSystem load_system(const std::string& path);
FullSystem load_full_system(const std::string& path);
void save_system(const MechanicalSystem& sys, const std::string& path);

MechanicalSystem decouple_modeling_mode(const FullSystem& full, const Eigen::VectorXd& mode_shape);
MechanicalSystem decouple_modeling_mode(const Eigen::MatrixXd& M, const Eigen::MatrixXd& C,
                                        const Eigen::MatrixXd& K, const NonlinearForm& F,
                                        const Eigen::VectorXd& mode_shape);
/// Reassembles block-diagonal matrices with x as coordinate 0.
FullSystem to_full(const MechanicalSystem& sys);

ModalSystem modal_transform(const MechanicalSystem& sys);

/// Drops damping, forcing and velocity-dependent nonlinear terms.
MechanicalSystem conservative_limit(const MechanicalSystem& sys);
ModalSystem conservative_limit(const ModalSystem& msys);
/// Scales c, C and velocity-dependent nonlinear terms by s.
MechanicalSystem scale_dissipation(const MechanicalSystem& sys, double s);

/// True if [P; Q] is the gradient of a polynomial potential (checked numerically).
bool is_gradient_field(const MechanicalSystem& sys);
/// Potential from the polynomial forces; throws PreconditionError when not a gradient.
PotentialFn polynomial_potential(const MechanicalSystem& sys);

}  // namespace ssmreduce
