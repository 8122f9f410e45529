#pragma once

#include "ssmreduce/system.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ssmreduce {

struct AnalyticParams {
    double c1 = 0.1, mu1 = 0.02, k1 = 1.0, a = 0.06, b = 0.02, c2 = 1.2, k2 = 27.0, c = 0.08;
};

/// x'' + (c1 + mu1 x^2) x' + k1 x + a x y + b x^3 = 0,  y'' + c2 y' + k2 y + c x^2 = 0
MechanicalSystem analytic_2dof(double c1, double mu1, double k1, double a, double b, double c2, double k2, double c);
MechanicalSystem analytic_2dof(const AnalyticParams& p = {});
/// c2 = r c1, k2 = r^2 k1.
MechanicalSystem analytic_2dof_nearres(double r = 2.01, AnalyticParams p = {});

struct ChainSpec {
    int n_dof = 12;
    double m = 1.0;
    double k = 1.0;
    double c = 0.0;
    double kappa2 = 0.0;
    double kappa3 = 0.0;
    double epsilon = 0.0;  // forcing amplitude along the first mode shape
    double Omega = 0.0;

    void validate() const;
};

/// Fixed-fixed nearest-neighbour chain; mode_shape is sin(i pi/(n+1)) normalized to unit length.
FullSystem oscillator_chain(const ChainSpec& spec);
/// V(q) = sum of 1/2 k d^2 + 1/3 kappa2 d^3 + 1/4 kappa3 d^4 over spring elongations d.
double chain_potential(const ChainSpec& spec, const Eigen::VectorXd& q);
/// Natural frequency 2 sqrt(k/m) sin(j pi / (2(n+1))), j 1-based.
double chain_frequency(const ChainSpec& spec, int j);
/// Potential over partitioned coordinates [x; y] of a decoupled chain.
PotentialFn chain_potential_partitioned(const ChainSpec& spec, const Eigen::MatrixXd& basis);

struct Preset {
    std::string name;
    std::string description;
    MechanicalSystem system;
    FullSystem full;
    PotentialFn potential;        // over partitioned coordinates
    std::optional<ChainSpec> chain;
};

std::vector<std::string> preset_names();
Preset make_preset(const std::string& name);

/// load_system plus provenance tagging.
MechanicalSystem import_external(const std::string& path);

}  // namespace ssmreduce
