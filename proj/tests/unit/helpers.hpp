#pragma once

#include "ssmreduce/system.hpp"

#include <filesystem>
#include <string>

namespace ssmtest {

struct OneModeTerms {
    double p20 = 0.0, p30 = 0.0, p1I = 0.0;
    double q20 = 0.0, q30 = 0.0;
    double c = 0.0, C = 0.0;
};

/// x'' (+ c x') + omega^2 x + P = 0,  y'' (+ C y') + Omega^2 y + Q = 0 with unit masses.
inline ssmreduce::MechanicalSystem one_mode(double omega, double Omega, const OneModeTerms& t = {}) {
    using namespace ssmreduce;
    MechanicalSystem s;
    s.m = 1.0;
    s.k = omega * omega;
    s.c = t.c;
    s.M = Eigen::MatrixXd::Identity(1, 1);
    s.K = Eigen::MatrixXd::Constant(1, 1, Omega * Omega);
    s.C = Eigen::MatrixXd::Constant(1, 1, t.C);
    s.P = NonlinearForm(1, 1);
    s.Q = NonlinearForm(1, 1);
    if (t.p20 != 0.0) s.P.add(s.P.key(2, 0), 0, t.p20);
    if (t.p30 != 0.0) s.P.add(s.P.key(3, 0), 0, t.p30);
    if (t.p1I != 0.0) s.P.add(s.P.key_y(1, 0, 0), 0, t.p1I);
    if (t.q20 != 0.0) s.Q.add(s.Q.key(2, 0), 0, t.q20);
    if (t.q30 != 0.0) s.Q.add(s.Q.key(3, 0), 0, t.q30);
    s.forcing.F2 = Eigen::VectorXd::Zero(1);
    s.basis = Eigen::MatrixXd::Identity(2, 2);
    s.provenance = "test";
    return s;
}

/// Fresh per-test scratch directory under the system temp path.
inline std::string scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("ssmreduce_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace ssmtest
