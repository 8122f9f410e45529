#pragma once

#include "ssmreduce/error.hpp"
#include "ssmreduce/system.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ssmreduce {

enum class Frame { general, modal };

/// Taylor coefficients of y = w20 x^2 + w02 xdot^2 + w30 x^3 + w12 x xdot^2.
struct LsmCoefficients {
    Eigen::VectorXd w20, w02, w30, w12;
    Frame frame = Frame::general;
};

/// x'' + omega0^2 x + a2 x^2 + a3 x^3 + b12 x xdot^2 = 0
struct LsmModel {
    double omega0 = 1.0;
    double a2 = 0.0;
    double a3 = 0.0;
    double b12 = 0.0;
    std::string provenance;
    std::string coordinate = "x";
    std::optional<LsmCoefficients> coefficients;
};

/// Resonance singularity in an LSM solve; ratios are omega_i / omega.
class LsmResonanceError : public PreconditionError {
public:
    LsmResonanceError(const std::string& what, std::vector<double> ratios)
        : PreconditionError(what), ratios_(std::move(ratios)) {}
    const std::vector<double>& ratios() const { return ratios_; }

private:
    std::vector<double> ratios_;
};

/// Block-system path in general coordinates.
LsmCoefficients lsm_coeffs_general(const MechanicalSystem& sys);
/// Quadratic coefficients (w20, w02) from the closed-form expressions in A = M^-1 K.
std::pair<Eigen::VectorXd, Eigen::VectorXd> lsm_quadratic_closed_form(const MechanicalSystem& sys);
LsmModel lsm_reduce_general(const MechanicalSystem& sys);

LsmCoefficients lsm_coeffs_modal(const ModalSystem& msys);
LsmModel lsm_reduce_modal(const ModalSystem& msys);

struct DuffingCheck {
    bool is_duffing = false;
    double omega0 = 0.0;
    double beta = 0.0;
};
DuffingCheck is_duffing(const LsmModel& model, double tol = 1e-12);

/// Conserved quantity of the truncated model, with H(0, 0) = 0.
double hamiltonian(const LsmModel& model, double x, double y);

struct SingularityEntry {
    std::size_t mode = 0;  // 1-based
    std::string type;      // nearest of "1:1", "1:2", "1:3"
    double ratio = 0.0;
    double margin = 0.0;
    double factor_d4 = 0.0;    // (Omega^2 D4)_ii
    double factor_d1d9 = 0.0;  // (D1 D9)_ii
    bool flagged = false;
};
std::vector<SingularityEntry> lsm_singularity_report(const ModalSystem& msys, double tol = 1e-3);

nlohmann::json to_json(const LsmModel& model);
nlohmann::json to_json(const std::vector<SingularityEntry>& report);
LsmModel lsm_model_from_json(const nlohmann::json& j);

}  // namespace ssmreduce
