#include "full_orbit.hpp"

#include "ssmreduce/sim.hpp"

#include <cmath>

namespace ssmtest {

using namespace ssmreduce;

namespace {

Eigen::VectorXd half_period_velocity(const RhsFn& rhs, std::size_t n, double r, const Eigen::VectorXd& y0,
                                     double tau) {
    std::vector<double> z(2 + 2 * n, 0.0);
    z[0] = r;
    for (std::size_t i = 0; i < n; ++i) z[2 + i] = y0[static_cast<Eigen::Index>(i)];
    IntegratorOptions io;
    io.rtol = 1e-13;
    io.atol = 1e-15 * std::max(1.0, r);
    const Trajectory tr = integrate(rhs, z, 0.0, tau, {tau}, io);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n + 1));
    v[0] = tr.states.back()[1];
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i + 1)] = tr.states.back()[2 + n + i];
    return v;
}

}  // namespace

PeriodicOrbit reversible_orbit(const RhsFn& rhs, std::size_t n, double r, const Eigen::VectorXd& y_guess,
                               double period_guess, double tol) {
    const Eigen::Index N = static_cast<Eigen::Index>(n);
    Eigen::VectorXd u(N + 1);
    u.head(N) = y_guess;
    u[N] = 0.5 * period_guess;
    PeriodicOrbit out;
    const double scale = std::max(r, 1e-12);
    for (int it = 0; it < 30; ++it) {
        const Eigen::VectorXd F = half_period_velocity(rhs, n, r, u.head(N), u[N]);
        if (F.lpNorm<Eigen::Infinity>() < tol * scale) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd J(N + 1, N + 1);
        for (Eigen::Index j = 0; j <= N; ++j) {
            const double h = j == N ? 1e-6 * u[N] : 1e-6 * scale;
            Eigen::VectorXd up = u, um = u;
            up[j] += h;
            um[j] -= h;
            J.col(j) = (half_period_velocity(rhs, n, r, up.head(N), up[N]) -
                        half_period_velocity(rhs, n, r, um.head(N), um[N])) /
                       (2.0 * h);
        }
        u -= J.fullPivLu().solve(F);
    }
    out.y0 = u.head(N);
    out.period = 2.0 * u[N];
    std::vector<double> z(2 + 2 * n, 0.0);
    z[0] = r;
    for (std::size_t i = 0; i < n; ++i) z[2 + i] = u[static_cast<Eigen::Index>(i)];
    IntegratorOptions io;
    io.rtol = 1e-12;
    io.atol = 1e-15;
    const Trajectory tr = integrate(rhs, z, 0.0, out.period, uniform_times(0.0, out.period, 4001), io);
    out.max_abs_y = Eigen::VectorXd::Zero(N);
    for (const auto& s : tr.states)
        for (std::size_t i = 0; i < n; ++i)
            out.max_abs_y[static_cast<Eigen::Index>(i)] =
                std::max(out.max_abs_y[static_cast<Eigen::Index>(i)], std::abs(s[2 + i]));
    return out;
}

}  // namespace ssmtest
