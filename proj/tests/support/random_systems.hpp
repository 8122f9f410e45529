#pragma once

#include "ssmreduce/lsm.hpp"
#include "ssmreduce/system.hpp"

#include <random>

namespace ssmtest {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);

struct RandomSystemOptions {
    int n_min = 1;
    int n_max = 5;
    bool damped = false;        // Rayleigh damping plus velocity-dependent terms
    bool cubic = true;
    double min_margin = 0.1;    // distance of omega_i/omega from 1, 2, 3
};

/// Random partitioned system with non-diagonal M, K (rejection-sampled on resonance margins).
ssmreduce::MechanicalSystem random_system(Rng& rng, const RandomSystemOptions& opts = {});

/// Random conservative planar reduced model with moderate coefficients.
ssmreduce::LsmModel random_lsm_model(Rng& rng, bool with_b12 = true);

/// Minimal ratio distance |omega_i/omega - k| for k = 1, 2, 3.
double resonance_margin(const ssmreduce::ModalSystem& ms);

}  // namespace ssmtest
