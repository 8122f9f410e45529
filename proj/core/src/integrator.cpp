#include "ssmreduce/integrator.hpp"

#include "ssmreduce/error.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <type_traits>

namespace ssmreduce {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

template <class S>
bool all_finite(const S& z) {
    return std::all_of(z.begin(), z.end(), [](double v) { return std::isfinite(v); });
}

void check_step(double t, double h_prev, double t0) {
    if (!(std::abs(h_prev) > 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), std::abs(t0))))
        throw NumericalError("integrator: step-size underflow at t = " + std::to_string(t));
}

void check_initial(const State& z0, std::size_t dim) {
    if (z0.size() != dim) throw InputError("integrator: initial state has wrong dimension");
    if (!all_finite(z0)) throw InputError("integrator: non-finite initial state");
}

template <class S>
S make_state(std::size_t dim) {
    if constexpr (std::is_same_v<S, State>)
        return S(dim, 0.0);
    else
        return S{};
}

template <class S>
S to_state(const State& z) {
    S out = make_state<S>(z.size());
    std::copy(z.begin(), z.end(), out.begin());
    return out;
}

// S is std::vector<double> or a fixed-size std::array for small reduced models.
template <class S>
class DopriStepper final : public Stepper {
public:
    DopriStepper(RhsFn rhs, std::size_t dim, const IntegratorOptions& opts)
        : rhs_(std::move(rhs)), dim_(dim), opts_(opts),
          stepper_(odeint::make_dense_output(opts.atol, opts.rtol, odeint::runge_kutta_dopri5<S>())) {}

    void initialize(const State& z0, double t0, double h0) override {
        check_initial(z0, dim_);
        if (h0 <= 0.0) h0 = initial_step_guess(rhs_, z0, t0, opts_.rtol, opts_.atol, 5);
        t0_ = t0;
        stepper_.initialize(to_state<S>(z0), t0, h0);
    }

    std::pair<double, double> step() override {
        std::size_t* evals = evals_.get();
        const RhsFn& f = rhs_;
        auto sys = [&f, evals](const S& z, S& dz, double t) {
            ++*evals;
            f(t, z.data(), dz.data());
        };
        std::pair<double, double> r;
        try {
            r = stepper_.do_step(sys);
        } catch (const odeint::step_adjustment_error& e) {
            throw NumericalError(std::string("integrator: step-size control failed: ") + e.what());
        }
        ++steps_;
        if (steps_ > opts_.max_steps) throw NumericalError("integrator: maximum number of steps exceeded");
        check_step(r.second, r.second - r.first, t0_);
        if (!all_finite(stepper_.current_state()))
            throw NumericalError("integrator: non-finite state at t = " + std::to_string(r.second));
        return r;
    }

    double time() const override { return stepper_.current_time(); }
    const double* state() const override { return stepper_.current_state().data(); }
    std::size_t dim() const override { return dim_; }
    void state_at(double t, double* out) const override {
        S buf = make_state<S>(dim_);
        const_cast<Dense&>(stepper_).calc_state(t, buf);
        std::copy(buf.begin(), buf.end(), out);
    }

private:
    using Dense = decltype(odeint::make_dense_output(1.0, 1.0, odeint::runge_kutta_dopri5<S>()));
    RhsFn rhs_;
    std::size_t dim_;
    IntegratorOptions opts_;
    Dense stepper_;
    double t0_ = 0.0;
};

class Rkf78Stepper final : public Stepper {
public:
    Rkf78Stepper(RhsFn rhs, std::size_t dim, const IntegratorOptions& opts)
        : rhs_(std::move(rhs)), dim_(dim), opts_(opts),
          controlled_(odeint::make_controlled(opts.atol, opts.rtol, odeint::runge_kutta_fehlberg78<State>())) {}

    void initialize(const State& z0, double t0, double h0) override {
        check_initial(z0, dim_);
        z_ = z0;
        zp_ = z0;
        t_ = tp_ = t0_ = t0;
        h_ = h0 > 0.0 ? h0 : initial_step_guess(rhs_, z0, t0, opts_.rtol, opts_.atol, 7);
    }

    std::pair<double, double> step() override {
        auto sys = system();
        State trial = z_;
        double t = t_, h = h_;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 500) throw NumericalError("integrator: step rejected repeatedly at t = " + std::to_string(t_));
            check_step(t_, h, t0_);
            trial = z_;
            const double t_before = t;
            if (controlled_.try_step(sys, trial, t, h) == odeint::success) {
                zp_ = z_;
                tp_ = t_before;
                z_ = std::move(trial);
                t_ = t;
                h_ = h;
                break;
            }
        }
        ++steps_;
        if (steps_ > opts_.max_steps) throw NumericalError("integrator: maximum number of steps exceeded");
        if (!all_finite(z_)) throw NumericalError("integrator: non-finite state at t = " + std::to_string(t_));
        return {tp_, t_};
    }

    double time() const override { return t_; }
    const double* state() const override { return z_.data(); }
    std::size_t dim() const override { return dim_; }

    // One uncontrolled step from the last accepted point keeps the full order.
    void state_at(double t, double* out) const override {
        if (t == t_) {
            std::copy(z_.begin(), z_.end(), out);
            return;
        }
        State buf = zp_;
        if (t != tp_) {
            auto sys = system();
            const_cast<Controlled&>(controlled_).stepper().do_step(sys, buf, tp_, t - tp_);
        }
        std::copy(buf.begin(), buf.end(), out);
    }

private:
    struct System {
        const RhsFn* f;
        std::size_t* evals;
        void operator()(const State& z, State& dz, double t) const {
            ++*evals;
            (*f)(t, z.data(), dz.data());
        }
    };
    System system() const { return {&rhs_, evals_.get()}; }

    using Controlled = decltype(odeint::make_controlled(1.0, 1.0, odeint::runge_kutta_fehlberg78<State>()));
    RhsFn rhs_;
    std::size_t dim_;
    IntegratorOptions opts_;
    Controlled controlled_;
    State z_, zp_;
    double t_ = 0.0, tp_ = 0.0, t0_ = 0.0, h_ = 0.0;
};

// Alexander's three-stage, stiffly accurate SDIRK of order 3 with step doubling.
class SdirkStepper final : public Stepper {
public:
    SdirkStepper(RhsFn rhs, std::size_t dim, const IntegratorOptions& opts)
        : rhs_(std::move(rhs)), dim_(dim), opts_(opts), tab_(sdirk3_tableau()) {}

    void initialize(const State& z0, double t0, double h0) override {
        check_initial(z0, dim_);
        z_ = z0;
        t_ = t0;
        t0_ = t0;
        h_ = h0 > 0.0 ? h0 : initial_step_guess(rhs_, z0, t0, opts_.rtol, opts_.atol, 3);
        f_.resize(dim_);
        eval(t_, z_, f_);
        zp_ = z_;
        fp_ = f_;
        tp_ = t_;
    }

    void set_stop_time(double t) override { stop_ = t; }

    std::pair<double, double> step() override {
        if (const double room = stop_ - t_; room > 0.0 && h_ > room) h_ = room;
        for (int attempt = 0; attempt < 60; ++attempt) {
            check_step(t_, h_, t0_);
            State full, half, f_half;
            bool ok = sdirk_step(t_, z_, h_, full);
            ok = ok && sdirk_step(t_, z_, 0.5 * h_, half);
            State mid = half;
            ok = ok && sdirk_step(t_ + 0.5 * h_, mid, 0.5 * h_, half);
            if (!ok || !all_finite(half)) {
                h_ *= 0.25;
                continue;
            }
            double err = 0.0;
            for (std::size_t i = 0; i < dim_; ++i) {
                const double sc = opts_.atol + opts_.rtol * std::max(std::abs(z_[i]), std::abs(half[i]));
                const double e = (half[i] - full[i]) / 7.0 / sc;
                err = std::max(err, std::abs(e));
            }
            const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.25), 0.2, 5.0);
            if (err <= 1.0) {
                zp_ = z_;
                fp_ = f_;
                tp_ = t_;
                z_ = std::move(half);
                t_ = (stop_ > t_ && t_ + h_ >= stop_) ? stop_ : t_ + h_;
                f_.assign(dim_, 0.0);
                eval(t_, z_, f_);
                h_ *= fac;
                ++steps_;
                if (steps_ > opts_.max_steps) throw NumericalError("integrator: maximum number of steps exceeded");
                return {tp_, t_};
            }
            h_ *= fac;
        }
        throw NumericalError("integrator: step rejected repeatedly at t = " + std::to_string(t_));
    }

    double time() const override { return t_; }
    const double* state() const override { return z_.data(); }
    std::size_t dim() const override { return dim_; }

    void state_at(double t, double* out) const override {
        const double h = t_ - tp_;
        if (h == 0.0) {
            std::copy(z_.begin(), z_.end(), out);
            return;
        }
        const double s = (t - tp_) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        for (std::size_t i = 0; i < dim_; ++i)
            out[i] = h00 * zp_[i] + h10 * h * fp_[i] + h01 * z_[i] + h11 * h * f_[i];
    }

private:
    void eval(double t, const State& z, State& dz) {
        ++*evals_;
        rhs_(t, z.data(), dz.data());
    }

    bool sdirk_step(double t, const State& z, double h, State& out) {
        const Eigen::Index n = static_cast<Eigen::Index>(dim_);
        const Eigen::Map<const Eigen::VectorXd> y0(z.data(), n);
        // Finite-difference Jacobian at the step start.
        Eigen::MatrixXd J(n, n);
        State f0(dim_), f1(dim_), zz = z;
        eval(t, z, f0);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(z[j]));
            zz[j] = z[j] + d;
            eval(t, zz, f1);
            zz[j] = z[j];
            for (Eigen::Index i = 0; i < n; ++i) J(i, j) = (f1[i] - f0[i]) / d;
        }
        const double g = tab_.gamma;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - h * g * J);
        std::array<Eigen::VectorXd, 3> K;
        State Yv(dim_), fy(dim_);
        for (int s = 0; s < 3; ++s) {
            Eigen::VectorXd base = y0;
            for (int j = 0; j < s; ++j) base += h * tab_.A(s, j) * K[j];
            Eigen::VectorXd Y = s == 0 ? Eigen::VectorXd(y0 + h * g * Eigen::Map<Eigen::VectorXd>(f0.data(), n))
                                       : Eigen::VectorXd(base + h * g * K[s - 1]);
            const double ts = t + tab_.c[s] * h;
            bool converged = false;
            for (int it = 0; it < 12; ++it) {
                Eigen::Map<Eigen::VectorXd>(Yv.data(), n) = Y;
                eval(ts, Yv, fy);
                const Eigen::Map<Eigen::VectorXd> fv(fy.data(), n);
                const Eigen::VectorXd res = Y - base - h * g * fv;
                const Eigen::VectorXd dY = lu.solve(-res);
                Y += dY;
                double nrm = 0.0;
                for (Eigen::Index i = 0; i < n; ++i)
                    nrm = std::max(nrm, std::abs(dY[i]) / (opts_.atol + opts_.rtol * std::abs(Y[i])));
                if (!std::isfinite(nrm)) return false;
                if (nrm < 1e-3) {
                    converged = true;
                    break;
                }
            }
            if (!converged) return false;
            K[s] = (Y - base) / (h * g);
        }
        Eigen::VectorXd y1 = y0;
        for (int s = 0; s < 3; ++s) y1 += h * tab_.b[s] * K[s];
        out.assign(y1.data(), y1.data() + n);
        return true;
    }

    RhsFn rhs_;
    std::size_t dim_;
    IntegratorOptions opts_;
    SdirkTableau tab_;
    State z_, f_, zp_, fp_;
    double t_ = 0.0, tp_ = 0.0, t0_ = 0.0, h_ = 0.0;
    double stop_ = std::numeric_limits<double>::infinity();
};

}  // namespace

SdirkTableau sdirk3_tableau() {
    SdirkTableau t;
    const double g = 0.43586652150845899942;
    const double tau = 0.5 * (1.0 + g);
    const double b1 = -(6.0 * g * g - 16.0 * g + 1.0) / 4.0;
    const double b2 = (6.0 * g * g - 20.0 * g + 5.0) / 4.0;
    t.gamma = g;
    t.A << g, 0.0, 0.0, tau - g, g, 0.0, b1, b2, g;
    t.b << b1, b2, g;
    t.c << g, tau, 1.0;
    return t;
}

double initial_step_guess(const RhsFn& rhs, const std::vector<double>& z0, double t0, double rtol, double atol,
                          int order) {
    const std::size_t n = z0.size();
    std::vector<double> f0(n), z1(n), f1(n);
    rhs(t0, z0.data(), f0.data());
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::abs(z0[i]);
        d0 = std::max(d0, std::abs(z0[i]) / sc);
        d1 = std::max(d1, std::abs(f0[i]) / sc);
    }
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    for (std::size_t i = 0; i < n; ++i) z1[i] = z0[i] + h0 * f0[i];
    rhs(t0 + h0, z1.data(), f1.data());
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::abs(z0[i]);
        d2 = std::max(d2, std::abs(f1[i] - f0[i]) / sc / h0);
    }
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 1.0 / (order + 1));
    return std::min(100.0 * h0, h1);
}

Scheme resolve_scheme(const IntegratorOptions& opts) {
    if (opts.scheme != Scheme::automatic) return opts.scheme;
    return opts.stiff ? Scheme::sdirk3 : Scheme::dopri5;
}

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::automatic: return "automatic";
        case Scheme::dopri5: return "dopri5";
        case Scheme::rkf78: return "rkf78";
        case Scheme::sdirk3: return "sdirk3";
    }
    return "unknown";
}

std::unique_ptr<Stepper> make_stepper(RhsFn rhs, std::size_t dim, const IntegratorOptions& opts) {
    if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) throw InputError("integrator: tolerances must be positive");
    if (dim == 0) throw InputError("integrator: empty state");
    switch (resolve_scheme(opts)) {
        case Scheme::sdirk3: return std::make_unique<SdirkStepper>(std::move(rhs), dim, opts);
        case Scheme::rkf78: return std::make_unique<Rkf78Stepper>(std::move(rhs), dim, opts);
        default:
            if (dim == 2) return std::make_unique<DopriStepper<std::array<double, 2>>>(std::move(rhs), dim, opts);
            return std::make_unique<DopriStepper<State>>(std::move(rhs), dim, opts);
    }
}

}  // namespace ssmreduce
