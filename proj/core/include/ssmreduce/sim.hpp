#pragma once

#include "ssmreduce/integrator.hpp"
#include "ssmreduce/lsm.hpp"
#include "ssmreduce/ssm.hpp"
#include "ssmreduce/system.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ssmreduce {

struct Trajectory {
    std::vector<double> t;
    std::vector<std::vector<double>> states;
    nlohmann::json meta = nlohmann::json::object();

    std::size_t size() const { return t.size(); }
    std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }
    /// Component c of every sample.
    std::vector<double> component(std::size_t c) const;
};

/// n equally spaced samples including both ends (a single sample when t0 == t1).
std::vector<double> uniform_times(double t0, double t1, std::size_t n);

/// Adaptive integration with dense output at the requested sample times (sorted, within [t0, t1]).
Trajectory integrate(const RhsFn& rhs, const std::vector<double>& z0, double t0, double t1,
                     const std::vector<double>& samples, const IntegratorOptions& opts);

struct Event {
    double t = 0.0;
    std::vector<double> state;
};

/// Integrates until max_events roots of g are located (sign change in the given direction:
/// +1 rising, -1 falling, 0 both) or t1 is reached. Roots are refined by bisection.
std::vector<Event> integrate_events(const RhsFn& rhs, const std::vector<double>& z0, double t0, double t1,
                                    const std::function<double(double, const double*)>& g, int direction,
                                    std::size_t max_events, const IntegratorOptions& opts,
                                    double time_tol = 1e-12);

// Right-hand sides; state layouts are [x, xd, y, yd] (partitioned/modal), [q, qd] (full), [x, xd] (reduced).
RhsFn partitioned_rhs(const MechanicalSystem& sys);
RhsFn full_rhs(const FullSystem& sys);
RhsFn modal_rhs(const ModalSystem& msys);
RhsFn lsm_rhs(const LsmModel& model);

// Gauss-Legendre order 6 in canonical variables (x, p = exp(b12 x^2) xdot); fixed step sized so the
// Richardson estimate over one linear period stays below tol.
Trajectory integrate_lsm_symplectic(const LsmModel& model, double x0, double y0, const std::vector<double>& times,
                                    double tol = 1e-10);
RhsFn ssm_rhs(const SsmModel& model);

/// Bivariate polynomial graph y = sum c_jk x^j xdot^k with vector coefficients.
class GraphPolynomial {
public:
    explicit GraphPolynomial(std::size_t n = 0) : n_(n) {}
    std::size_t n() const { return n_; }
    const std::map<std::pair<int, int>, Eigen::VectorXd>& terms() const { return terms_; }

    void add(int j, int k, const Eigen::VectorXd& c);
    Eigen::VectorXd eval(double x, double xd) const;
    GraphPolynomial d_dx() const;
    GraphPolynomial d_dxd() const;
    /// Product with a scalar bivariate polynomial.
    GraphPolynomial times(const std::map<std::pair<int, int>, double>& scalar) const;
    GraphPolynomial truncated(int max_degree) const;
    GraphPolynomial operator+(const GraphPolynomial& o) const;

private:
    std::size_t n_ = 0;
    std::map<std::pair<int, int>, Eigen::VectorXd> terms_;
};

/// Position and velocity graphs of an LSM expansion (the velocity graph is the order-3 time derivative).
std::pair<GraphPolynomial, GraphPolynomial> lsm_graphs(const LsmCoefficients& coeffs,
                                                       const std::map<std::pair<int, int>, double>& xddot_poly,
                                                       double omega);
/// Quadratic position and velocity graphs of the autonomous SSM part, in modal coordinates.
std::pair<GraphPolynomial, GraphPolynomial> ssm_graphs(const SsmCoefficients& coeffs);

/// Max-norm invariance mismatch over 16 states with ||(x, xdot/omega)|| = amplitude.
double invariance_residual(const MechanicalSystem& sys, const LsmCoefficients& coeffs, double amplitude);
double invariance_residual(const ModalSystem& msys, const LsmCoefficients& coeffs, double amplitude);
double invariance_residual(const ModalSystem& msys, const SsmCoefficients& coeffs, double amplitude);

/// Log-log least-squares slope.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Per-sample distance ||(y, ydot) - manifold(x, xdot, Omega t)|| for a partitioned trajectory.
std::vector<double> manifold_distance(const Trajectory& traj, const SsmCoefficients& coeffs,
                                      const ModalSystem& msys);
/// Maps a full-system trajectory [q, qd] to partitioned coordinates with q = basis [x; y].
Trajectory to_partitioned(const Trajectory& full, const Eigen::MatrixXd& basis);

/// Exponential rate of the envelope (local maxima above floor_fraction of the first maximum).
double envelope_decay_rate(const std::vector<double>& t, const std::vector<double>& d,
                           double floor_fraction = 1e-4);

/// Max |a_i - b_i| over common samples of scalar series.
double max_abs_difference(const std::vector<double>& a, const std::vector<double>& b);

/// Median wall-clock seconds of fn over runs repetitions (monotonic clock).
double median_wall_time(const std::function<void()>& fn, int runs = 5);

/// CSV with t, x, xdot[, y1..yn, ydot1..ydotn].
std::string trajectory_csv(const Trajectory& traj, bool reduced_only = false);

}  // namespace ssmreduce
