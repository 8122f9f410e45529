#pragma once

#include "ssmreduce/system.hpp"

#include <nlohmann/json.hpp>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace ssmreduce {

using Complex = std::complex<double>;

struct Spectrum {
    std::vector<Complex> lambda_x;  // decreasing real part
    std::vector<Complex> lambda_y;
    std::optional<int> sigma;       // absolute spectral quotient
    bool conservative = false;
    bool slow_subspace_ok = true;
    std::vector<std::string> diagnostics;
};

/// Roots of det(lambda^2 M + lambda C + K) via companion linearization, sorted.
std::vector<Complex> quadratic_eigenvalues(const Eigen::MatrixXd& M, const Eigen::MatrixXd& C,
                                           const Eigen::MatrixXd& K);
/// Total order: decreasing real part, then increasing |imag|, then positive imag first.
void sort_spectrum(std::vector<Complex>& lambdas);

/// Integer part of a ratio, snapping to the nearest integer within 1e-9 relative.
int integer_part(double ratio);

Spectrum compute_spectrum(const MechanicalSystem& sys);
/// Spectrum of a modal description: omega0/zeta for x, per-mode omega_i/zeta_i for y.
Spectrum spectrum_from_modal(double omega0, double zeta, const Eigen::VectorXd& omega,
                             const Eigen::VectorXd& zeta_vec);

struct ResonanceFlag {
    std::size_t mode = 0;   // 1-based non-modeling index
    std::string kind;       // "1:k" or "order m"
    double ratio = 0.0;
    double margin = 0.0;
    bool hard = false;      // exact resonance
};

struct ResonanceReport {
    std::vector<ResonanceFlag> flags;
    std::vector<double> distances;  // per mode, minimal margin
    std::vector<std::string> warnings;
    bool truncated = false;
    bool passed() const { return flags.empty(); }
};

ResonanceReport check_lsm_nonresonance(const Spectrum& spec, double tol = 1e-3);
ResonanceReport check_ssm_nonresonance(const Spectrum& spec, double tol = 1e-3, int sigma_cap = 100);

nlohmann::json to_json(const Spectrum& spec);
nlohmann::json to_json(const ResonanceReport& report);

}  // namespace ssmreduce
