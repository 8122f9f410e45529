#pragma once

#include "ssmreduce/bench.hpp"
#include "ssmreduce/system.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ssmreduce::cli {

struct RunConfig {
    std::string command;
    std::string input;
    std::string preset;
    std::string out = "out";
    std::string method;
    std::optional<double> rtol, atol;
    std::optional<double> r_max;
    std::optional<int> steps;
    std::optional<double> omega_min, omega_max;
    std::optional<double> eps;
    std::string direction = "up";
    bool verify = false;
    bool compare = false;
    std::optional<int> threads;
    std::uint64_t seed = 0;
    // simulate
    std::optional<double> t_end;
    double x0 = 0.5;
    std::string start = "manifold";
    double resonance_tol = 1e-3;
};

/// System under study plus what the preset or file provides.
struct Loaded {
    std::string name;
    MechanicalSystem system;
    FullSystem full;
    PotentialFn potential;
    bool has_potential = false;
};

Loaded load(const RunConfig& cfg);
int resolve_threads(const std::optional<int>& flag);

/// Resonance and validity diagnostics shared by reduce and check.
struct ResonanceSummary {
    nlohmann::json report;
    bool ssm_blocked = false;
    bool lsm_blocked = false;
};
ResonanceSummary resonance_summary(const MechanicalSystem& sys, double tol);

int cmd_reduce(const RunConfig& cfg);
int cmd_backbone(const RunConfig& cfg);
int cmd_frc(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_check(const RunConfig& cfg);

/// Dispatches cfg.command and maps exceptions onto exit codes.
int execute(const RunConfig& cfg);
/// Parses argv; returns the exit code.
int run(int argc, char** argv);

}  // namespace ssmreduce::cli
