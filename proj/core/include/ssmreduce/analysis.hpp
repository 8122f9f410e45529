#pragma once

#include "ssmreduce/lsm.hpp"
#include "ssmreduce/ssm.hpp"
#include "ssmreduce/system.hpp"

#include <string>
#include <vector>

namespace ssmreduce {

/// r^2 coefficient of omega(r) = omega0 + omega2_coeff r^2 (also called omega1 in the backbone formula).
double backbone_coefficient(const LsmModel& model);
inline double omega2_coeff(const LsmModel& model) { return backbone_coefficient(model); }

struct BackboneSample {
    double r = 0.0;
    double omega = 0.0;
    double closure = 0.0;  // |x_return - r|, shooting only
};

struct BackboneCurve {
    std::vector<BackboneSample> samples;
    double omega0 = 0.0;
    double omega1 = 0.0;
    std::string method;
};

/// Second-order formula sampled on steps+1 points of [0, r_max] (one point when r_max = 0).
BackboneCurve backbone_curve(const LsmModel& model, double r_max, int steps);

struct ShootingOptions {
    double rtol = 1e-12;
    double atol = 1e-15;
    int threads = 1;
};
/// Period of the orbit through (r, 0) from the first return to {xdot = 0, x > 0}.
BackboneCurve shooting_backbone(const LsmModel& model, const std::vector<double>& r_list,
                                const ShootingOptions& opts = {});

/// |w20| r^2 per non-modeling mode.
Eigen::VectorXd nonmodeling_amplitude(const LsmCoefficients& coeffs, double r);

/// Energy at (x, xdot) = (r, 0) on the LSM; modal-frame coefficients are mapped through Phi2.
double energy_at_amplitude(const MechanicalSystem& sys, const PotentialFn& potential, const LsmCoefficients& coeffs,
                           double r, const Eigen::MatrixXd& Phi2 = {});

struct FrequencyEnergySample {
    double energy = 0.0;
    double omega = 0.0;
};
struct FrequencyEnergyCurve {
    std::vector<FrequencyEnergySample> samples;
    std::string method;
};
FrequencyEnergyCurve frequency_energy(const MechanicalSystem& sys, const PotentialFn& potential,
                                      const LsmCoefficients& coeffs, const BackboneCurve& backbone,
                                      const Eigen::MatrixXd& Phi2 = {});

enum class Direction { up, down };
std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

struct FrcSample {
    double Omega = 0.0;
    double amplitude = 0.0;
    bool stable = true;
    bool converged = true;
};

struct ForcedResponseCurve {
    std::vector<FrcSample> samples;
    double epsilon = 0.0;
    double F1 = 0.0;
    std::string method;
    Direction direction = Direction::up;
    std::vector<std::string> diagnostics;
};

/// epsilon F1 / |k - m Omega^2 + i c Omega|
double linear_response_amplitude(const SsmModel& model, double Omega);

struct SweepOptions {
    double rtol = 1e-10;
    double atol = 1e-13;
    int min_periods = 20;
    int max_periods = 20000;
    int window = 10;
    double steady_tol = 1e-6;
};
ForcedResponseCurve frc_sweep(const SsmModel& model, double Omega_min, double Omega_max, int steps,
                              Direction direction, const SweepOptions& opts = {});

struct HarmonicBalanceOptions {
    int quadrature = 32;
    double ds = 0.01;       // initial arclength step in scaled units
    double ds_min = 1e-7;
    double ds_max = 0.05;
    int max_points = 20000;
    double newton_tol = 1e-12;
};
/// Ansatz x = a0 + a cos(Omega t) + b sin(Omega t), continued in Omega by pseudo-arclength.
ForcedResponseCurve frc_harmonic_balance(const SsmModel& model, double Omega_min, double Omega_max,
                                         const HarmonicBalanceOptions& opts = {});

/// Largest relative amplitude gap between converged sweep samples and the nearest stable
/// harmonic-balance branch at the same Omega.
double frc_agreement(const ForcedResponseCurve& sweep, const ForcedResponseCurve& hb);

/// Omega of the largest amplitude sample.
double frc_peak_frequency(const ForcedResponseCurve& frc);

std::string backbone_csv(const std::vector<BackboneCurve>& curves);
std::string frc_csv(const std::vector<ForcedResponseCurve>& curves);
std::string frequency_energy_csv(const FrequencyEnergyCurve& curve);

}  // namespace ssmreduce
