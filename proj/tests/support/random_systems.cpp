#include "random_systems.hpp"

#include <cmath>

namespace ssmtest {

using namespace ssmreduce;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double resonance_margin(const ModalSystem& ms) {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ms.omega.size(); ++i)
        for (int k = 1; k <= 3; ++k) m = std::min(m, std::abs(ms.omega[i] / ms.omega0 - k));
    return m;
}

namespace {

Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index n, double shift) {
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = uniform(rng, -1.0, 1.0);
    return 0.5 * A * A.transpose() + shift * Eigen::MatrixXd::Identity(n, n);
}

MechanicalSystem draw(Rng& rng, const RandomSystemOptions& o) {
    const int n = std::uniform_int_distribution<int>(o.n_min, o.n_max)(rng);
    const Eigen::Index N = n;
    MechanicalSystem s;
    s.m = uniform(rng, 0.5, 2.0);
    s.k = uniform(rng, 0.5, 2.0);
    s.M = random_spd(rng, N, 0.5);
    s.K = random_spd(rng, N, 0.2) * uniform(rng, 1.0, 15.0);
    s.P = NonlinearForm(static_cast<std::size_t>(n), 1);
    s.Q = NonlinearForm(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    const auto u = [&]() { return uniform(rng, -1.0, 1.0); };
    s.P.add(s.P.key(2, 0), 0, u());
    if (o.cubic) s.P.add(s.P.key(3, 0), 0, u());
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        s.P.add(s.P.key_y(1, 0, i), 0, u());
        s.Q.add(s.Q.key(2, 0), i, u());
        if (o.cubic) s.Q.add(s.Q.key(3, 0), i, u());
        s.Q.add(s.Q.key_y(1, 0, i), i, u());
    }
    if (o.damped) {
        const double alpha = uniform(rng, 0.0, 0.02), beta = uniform(rng, 0.0, 0.02);
        s.C = alpha * s.M + beta * s.K;
        s.c = alpha * s.m + beta * s.k;
        s.P.add(s.P.key(1, 1), 0, u());
        s.P.add(s.P.key(0, 2), 0, u());
        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
            s.Q.add(s.Q.key(1, 1), i, u());
            s.Q.add(s.Q.key(0, 2), i, u());
        }
    } else {
        s.C = Eigen::MatrixXd::Zero(N, N);
        s.c = 0.0;
    }
    s.forcing.F2 = Eigen::VectorXd::Zero(N);
    s.basis = Eigen::MatrixXd::Identity(N + 1, N + 1);
    s.provenance = "random";
    return s;
}

}  // namespace

MechanicalSystem random_system(Rng& rng, const RandomSystemOptions& o) {
    for (;;) {
        MechanicalSystem s = draw(rng, o);
        if (resonance_margin(modal_transform(s)) > o.min_margin) return s;
    }
}

LsmModel random_lsm_model(Rng& rng, bool with_b12) {
    LsmModel m;
    m.omega0 = uniform(rng, 0.5, 2.0);
    const double w2 = m.omega0 * m.omega0;
    m.a2 = uniform(rng, -0.5, 0.5) * w2;
    m.a3 = uniform(rng, -0.5, 1.0) * w2;
    m.b12 = with_b12 ? uniform(rng, -0.5, 0.5) : 0.0;
    m.provenance = "random";
    return m;
}

}  // namespace ssmtest
