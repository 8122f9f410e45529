#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ssmreduce {

/// dz = f(t, z); both arrays have the system dimension.
using RhsFn = std::function<void(double t, const double* z, double* dz)>;

enum class Scheme {
    automatic,  // dopri5, or sdirk3 when stiff
    dopri5,     // Dormand-Prince 5(4), native dense output
    rkf78,      // Runge-Kutta-Fehlberg 7(8), dense output by re-stepping
    sdirk3,     // L-stable three-stage SDIRK, Hermite dense output
};

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    bool stiff = false;
    Scheme scheme = Scheme::automatic;
    double initial_step = 0.0;  // 0 selects a heuristic
    std::size_t max_steps = 100'000'000;
};

/// Adaptive stepper with dense output over the last accepted step.
class Stepper {
public:
    virtual ~Stepper() = default;
    virtual void initialize(const std::vector<double>& z0, double t0, double h0) = 0;
    /// Advances one accepted step; returns (t_prev, t_now).
    virtual std::pair<double, double> step() = 0;
    virtual double time() const = 0;
    virtual const double* state() const = 0;
    virtual std::size_t dim() const = 0;
    /// Interpolated state for t in the last step interval; out holds dim() values.
    virtual void state_at(double t, double* out) const = 0;
    void state_at(double t, std::vector<double>& out) const {
        out.resize(dim());
        state_at(t, out.data());
    }

    /// Steps are shortened so none crosses t (schemes without native dense output only).
    virtual void set_stop_time(double t) { (void)t; }

    std::size_t steps() const { return steps_; }
    std::size_t rhs_evals() const { return *evals_; }

protected:
    std::size_t steps_ = 0;
    std::shared_ptr<std::size_t> evals_ = std::make_shared<std::size_t>(0);
};

Scheme resolve_scheme(const IntegratorOptions& opts);
std::string to_string(Scheme s);

/// Stepper for the resolved scheme.
std::unique_ptr<Stepper> make_stepper(RhsFn rhs, std::size_t dim, const IntegratorOptions& opts);

/// Butcher tableau of the stiff scheme, exposed for order-condition tests.
struct SdirkTableau {
    double gamma;
    Eigen::Matrix3d A;
    Eigen::Vector3d b, c;
};
SdirkTableau sdirk3_tableau();

double initial_step_guess(const RhsFn& rhs, const std::vector<double>& z0, double t0, double rtol, double atol,
                          int order);

}  // namespace ssmreduce
