#include "ssmreduce/sim.hpp"

#include "ssmreduce/error.hpp"
#include "ssmreduce/io.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ssmreduce {

std::vector<double> Trajectory::component(std::size_t c) const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.at(c));
    return out;
}

std::vector<double> uniform_times(double t0, double t1, std::size_t n) {
    if (n <= 1 || t1 == t0) return {t0};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.back() = t1;
    return out;
}

namespace {
constexpr double kGlobalSafety = 0.05;
}  // namespace

Trajectory integrate(const RhsFn& rhs, const std::vector<double>& z0, double t0, double t1,
                     const std::vector<double>& samples, const IntegratorOptions& opts) {
    if (t1 < t0) throw InputError("integrate: t_end precedes t_start");
    if (!std::is_sorted(samples.begin(), samples.end())) throw InputError("integrate: sample times must be sorted");
    for (double s : samples)
        if (s < t0 || s > t1) throw InputError("integrate: sample time outside the integration span");

    Trajectory tr;
    const auto start = std::chrono::steady_clock::now();
    std::size_t idx = 0;
    while (idx < samples.size() && samples[idx] == t0) {
        tr.t.push_back(t0);
        tr.states.push_back(z0);
        ++idx;
    }
    std::size_t steps = 0, evals = 0;
    if (idx < samples.size()) {
        // Local tolerances tightened so the global error over long horizons stays within a few rtol.
        IntegratorOptions local = opts;
        if (resolve_scheme(opts) != Scheme::sdirk3) {
            local.rtol *= kGlobalSafety;
            local.atol *= kGlobalSafety;
        }
        auto stepper = make_stepper(rhs, z0.size(), local);
        stepper->initialize(z0, t0, opts.initial_step);
        const bool land_on_samples = resolve_scheme(opts) == Scheme::sdirk3;
        std::vector<double> buf;
        while (idx < samples.size()) {
            if (land_on_samples) stepper->set_stop_time(samples[idx]);
            const auto [ta, tb] = stepper->step();
            (void)ta;
            while (idx < samples.size() && samples[idx] <= tb) {
                stepper->state_at(samples[idx], buf);
                tr.t.push_back(samples[idx]);
                tr.states.push_back(buf);
                ++idx;
            }
        }
        steps = stepper->steps();
        evals = stepper->rhs_evals();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    tr.meta = {{"t_start", t0},   {"t_end", t1},      {"rtol", opts.rtol},          {"atol", opts.atol},
               {"stiff", opts.stiff}, {"steps", steps}, {"rhs_evaluations", evals}, {"wall_seconds", wall},
               {"integrator", to_string(resolve_scheme(opts))}};
    return tr;
}

std::vector<Event> integrate_events(const RhsFn& rhs, const std::vector<double>& z0, double t0, double t1,
                                    const std::function<double(double, const double*)>& g, int direction,
                                    std::size_t max_events, const IntegratorOptions& opts, double time_tol) {
    std::vector<Event> events;
    if (max_events == 0 || t1 <= t0) return events;
    auto stepper = make_stepper(rhs, z0.size(), opts);
    stepper->initialize(z0, t0, opts.initial_step);
    double g_prev = g(t0, z0.data());
    std::vector<double> buf;
    auto crosses = [direction](double a, double b) {
        const bool rising = a < 0.0 && b >= 0.0;
        const bool falling = a > 0.0 && b <= 0.0;
        return direction > 0 ? rising : direction < 0 ? falling : (rising || falling);
    };
    while (stepper->time() < t1) {
        const auto [ta, tb] = stepper->step();
        const double g_now = g(tb, stepper->state());
        if (crosses(g_prev, g_now)) {
            double lo = ta, hi = tb, glo = g_prev;
            for (int it = 0; it < 200 && hi - lo > time_tol * std::max(1.0, std::abs(hi)); ++it) {
                const double mid = 0.5 * (lo + hi);
                stepper->state_at(mid, buf);
                const double gm = g(mid, buf.data());
                if (crosses(glo, gm)) {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
            }
            const double te = 0.5 * (lo + hi);
            if (te > t1) break;
            stepper->state_at(te, buf);
            events.push_back({te, buf});
            if (events.size() >= max_events) break;
        }
        g_prev = g_now;
    }
    return events;
}

RhsFn partitioned_rhs(const MechanicalSystem& sys) {
    validate(sys);
    const std::size_t n = sys.n();
    const Eigen::MatrixXd Minv = sys.M.inverse();
    const Eigen::MatrixXd MK = Minv * sys.K, MC = Minv * sys.C;
    const Eigen::VectorXd MF2 = sys.forcing.F2.size() == static_cast<Eigen::Index>(n)
                                    ? Eigen::VectorXd(Minv * sys.forcing.F2)
                                    : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    const auto P = std::make_shared<CompiledForm>(sys.P);
    const auto Q = std::make_shared<CompiledForm>(sys.Q);
    const double m = sys.m, c = sys.c, k = sys.k, F1 = sys.forcing.F1;
    const double eps = sys.forcing.epsilon, Om = sys.forcing.Omega;
    return [=](double t, const double* z, double* dz) {
        const double f = eps * std::sin(Om * t);
        double p = 0.0;
        P->accumulate(z, &p);
        std::vector<double> q(n, 0.0);
        Q->accumulate(z, q.data());
        dz[0] = z[1];
        dz[1] = (-c * z[1] - k * z[0] - p + F1 * f) / m;
        const Eigen::Map<const Eigen::VectorXd> y(z + 2, static_cast<Eigen::Index>(n));
        const Eigen::Map<const Eigen::VectorXd> yd(z + 2 + n, static_cast<Eigen::Index>(n));
        const Eigen::Map<const Eigen::VectorXd> qv(q.data(), static_cast<Eigen::Index>(n));
        Eigen::Map<Eigen::VectorXd>(dz + 2, static_cast<Eigen::Index>(n)) = yd;
        Eigen::Map<Eigen::VectorXd>(dz + 2 + n, static_cast<Eigen::Index>(n)) =
            -MK * y - MC * yd - Minv * qv + MF2 * f;
    };
}

RhsFn full_rhs(const FullSystem& sys) {
    validate(sys);
    const std::size_t n = sys.dofs();
    const Eigen::Index N = static_cast<Eigen::Index>(n);
    const Eigen::MatrixXd Minv = sys.M.inverse();
    const Eigen::MatrixXd MK = Minv * sys.K, MC = Minv * sys.C;
    const Eigen::VectorXd MF = sys.force.size() == N ? Eigen::VectorXd(Minv * sys.force) : Eigen::VectorXd::Zero(N);
    const auto F = std::make_shared<CompiledForm>(sys.F.project(-Minv));
    const double eps = sys.epsilon, Om = sys.Omega;
    const bool forced = eps != 0.0 && MF.squaredNorm() > 0.0;
    return [=](double t, const double* z, double* dz) {
        thread_local std::vector<double> buf;
        buf.resize(2 + 2 * n);
        buf[0] = buf[1] = 0.0;
        std::copy(z, z + 2 * n, buf.begin() + 2);
        const Eigen::Map<const Eigen::VectorXd> q(z, N), qd(z + n, N);
        Eigen::Map<Eigen::VectorXd>(dz, N) = qd;
        Eigen::Map<Eigen::VectorXd> acc(dz + n, N);
        acc.noalias() = -MK * q;
        acc.noalias() -= MC * qd;
        if (forced) acc += MF * (eps * std::sin(Om * t));
        F->accumulate(buf.data(), dz + n);
    };
}

RhsFn modal_rhs(const ModalSystem& ms) {
    const std::size_t n = ms.n();
    const Eigen::Index N = static_cast<Eigen::Index>(n);
    const auto R = std::make_shared<CompiledForm>(ms.R);
    const auto S = std::make_shared<CompiledForm>(ms.S);
    const Eigen::VectorXd w2 = ms.omega.array().square();
    const Eigen::VectorXd d = 2.0 * ms.zeta_vec.array() * ms.omega.array();
    const Eigen::VectorXd F2 = ms.Fhat2.size() == N ? ms.Fhat2 : Eigen::VectorXd::Zero(N);
    const double w0 = ms.omega0, z0 = ms.zeta, F1 = ms.Fhat1, eps = ms.epsilon, Om = ms.Omega;
    return [=](double t, const double* z, double* dz) {
        const double f = eps * std::sin(Om * t);
        double r = 0.0;
        R->accumulate(z, &r);
        std::vector<double> s(n, 0.0);
        S->accumulate(z, s.data());
        dz[0] = z[1];
        dz[1] = -2.0 * z0 * w0 * z[1] - w0 * w0 * z[0] - r + F1 * f;
        for (Eigen::Index i = 0; i < N; ++i) {
            dz[2 + i] = z[2 + n + i];
            dz[2 + n + i] = -d[i] * z[2 + n + i] - w2[i] * z[2 + i] - s[i] + F2[i] * f;
        }
    };
}

RhsFn lsm_rhs(const LsmModel& l) {
    const double w2 = l.omega0 * l.omega0, a2 = l.a2, a3 = l.a3, b12 = l.b12;
    return [=](double, const double* z, double* dz) {
        const double x = z[0], v = z[1];
        dz[0] = v;
        dz[1] = -w2 * x - a2 * x * x - a3 * x * x * x - b12 * x * v * v;
    };
}

namespace {

struct CanonicalLsm {
    double w2, a2, a3, g;
    void operator()(const std::array<double, 2>& z, std::array<double, 2>& dz) const {
        const double x = z[0], p = z[1];
        const double m = std::exp(g * x * x);
        dz[0] = p / m;
        dz[1] = g * x * p * p / m - m * x * (w2 + x * (a2 + a3 * x));
    }
};

// One Gauss-Legendre 3-stage step, stages solved by fixed-point iteration.
std::array<double, 2> gauss_step(const CanonicalLsm& f, const std::array<double, 2>& z, double h) {
    static const double s15 = std::sqrt(15.0);
    static const double A[3][3] = {{5.0 / 36.0, 2.0 / 9.0 - s15 / 15.0, 5.0 / 36.0 - s15 / 30.0},
                                   {5.0 / 36.0 + s15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - s15 / 24.0},
                                   {5.0 / 36.0 + s15 / 30.0, 2.0 / 9.0 + s15 / 15.0, 5.0 / 36.0}};
    static const double b[3] = {5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0};
    std::array<std::array<double, 2>, 3> k{};
    f(z, k[0]);
    k[1] = k[2] = k[0];
    for (int it = 0; it < 200; ++it) {
        std::array<std::array<double, 2>, 3> kn{};
        double change = 0.0, size = 0.0;
        for (int i = 0; i < 3; ++i) {
            std::array<double, 2> zi = z;
            for (int j = 0; j < 3; ++j)
                for (int c = 0; c < 2; ++c) zi[c] += h * A[i][j] * k[j][c];
            f(zi, kn[i]);
            for (int c = 0; c < 2; ++c) {
                change = std::max(change, std::abs(kn[i][c] - k[i][c]));
                size = std::max(size, std::abs(kn[i][c]));
            }
        }
        k = kn;
        if (change <= 1e-15 * std::max(size, 1e-300)) break;
        if (it == 199) throw NumericalError("symplectic step: stage iteration did not converge");
    }
    std::array<double, 2> out = z;
    for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 2; ++c) out[c] += h * b[j] * k[j][c];
    return out;
}

double richardson_error(const CanonicalLsm& f, const std::array<double, 2>& z, double h, double tol) {
    const auto full = gauss_step(f, z, h);
    const auto half = gauss_step(f, gauss_step(f, z, 0.5 * h), 0.5 * h);
    const double scale = std::max(std::abs(z[0]), std::abs(z[1])) + tol;
    return std::max(std::abs(half[0] - full[0]), std::abs(half[1] - full[1])) * 64.0 / 63.0 / scale;
}

}  // namespace

Trajectory integrate_lsm_symplectic(const LsmModel& l, double x0, double y0, const std::vector<double>& times,
                                    double tol) {
    if (times.empty()) throw InputError("integrate_lsm_symplectic: no sample times");
    if (!std::is_sorted(times.begin(), times.end())) throw InputError("integrate_lsm_symplectic: unsorted times");
    if (!(tol > 0.0)) throw InputError("integrate_lsm_symplectic: tolerance must be positive");
    const auto start = std::chrono::steady_clock::now();
    const CanonicalLsm f{l.omega0 * l.omega0, l.a2, l.a3, l.b12};
    const std::array<double, 2> z0{x0, std::exp(l.b12 * x0 * x0) * y0};
    const double period = 2.0 * std::numbers::pi / l.omega0;

    double h = period / 16.0;
    for (;;) {
        if (h < period * 1e-9) throw NumericalError("integrate_lsm_symplectic: step size underflow");
        double worst = 0.0;
        auto z = z0;
        for (double t = 0.0; t < period; t += h) {
            worst = std::max(worst, richardson_error(f, z, h, tol));
            z = gauss_step(f, z, h);
        }
        if (worst <= tol) break;
        h *= std::max(0.2, 0.9 * std::pow(tol / worst, 1.0 / 7.0));
    }

    Trajectory tr;
    auto z = z0;
    std::size_t steps = 0;
    auto record = [&](double t) {
        const double m = std::exp(l.b12 * z[0] * z[0]);
        tr.t.push_back(t);
        tr.states.push_back({z[0], z[1] / m});
    };
    record(times[0]);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double span = times[i] - times[i - 1];
        const auto n = static_cast<std::size_t>(std::ceil(span / h));
        for (std::size_t s = 0; s < n; ++s) z = gauss_step(f, z, span / static_cast<double>(n));
        steps += n;
        record(times[i]);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    tr.meta = {{"t_start", times.front()}, {"t_end", times.back()}, {"rtol", tol},      {"atol", tol},
               {"stiff", false},          {"steps", steps},        {"step_size", h}, {"wall_seconds", wall},
               {"integrator", "gauss-legendre6"}};
    return tr;
}

RhsFn ssm_rhs(const SsmModel& r) {
    const double im = 1.0 / r.m;
    const double c = r.c * im, k = r.k * im, q0 = r.x2 * im, q1 = r.xxd * im, q2 = r.xd2 * im;
    const double c0 = r.cubic(0) * im, c1 = r.cubic(1) * im, c2 = r.cubic(2) * im, c3 = r.cubic(3) * im;
    const double f = r.epsilon * r.F1 * im, Om = r.Omega;
    return [=](double t, const double* z, double* dz) {
        const double x = z[0], v = z[1];
        const double nl = x * (q0 * x + q1 * v + x * (c0 * x + c1 * v)) + v * v * (q2 + c2 * x + c3 * v);
        dz[0] = v;
        dz[1] = -c * v - k * x - nl + (f != 0.0 ? f * std::sin(Om * t) : 0.0);
    };
}

void GraphPolynomial::add(int j, int k, const Eigen::VectorXd& c) {
    auto it = terms_.find({j, k});
    if (it == terms_.end())
        terms_.emplace(std::make_pair(j, k), c);
    else
        it->second += c;
}

Eigen::VectorXd GraphPolynomial::eval(double x, double xd) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
    for (const auto& [e, c] : terms_) out += c * (std::pow(x, e.first) * std::pow(xd, e.second));
    return out;
}

GraphPolynomial GraphPolynomial::d_dx() const {
    GraphPolynomial g(n_);
    for (const auto& [e, c] : terms_)
        if (e.first > 0) g.add(e.first - 1, e.second, c * e.first);
    return g;
}

GraphPolynomial GraphPolynomial::d_dxd() const {
    GraphPolynomial g(n_);
    for (const auto& [e, c] : terms_)
        if (e.second > 0) g.add(e.first, e.second - 1, c * e.second);
    return g;
}

GraphPolynomial GraphPolynomial::times(const std::map<std::pair<int, int>, double>& s) const {
    GraphPolynomial g(n_);
    for (const auto& [e, c] : terms_)
        for (const auto& [f, v] : s) g.add(e.first + f.first, e.second + f.second, c * v);
    return g;
}

GraphPolynomial GraphPolynomial::truncated(int max_degree) const {
    GraphPolynomial g(n_);
    for (const auto& [e, c] : terms_)
        if (e.first + e.second <= max_degree) g.add(e.first, e.second, c);
    return g;
}

GraphPolynomial GraphPolynomial::operator+(const GraphPolynomial& o) const {
    GraphPolynomial g = *this;
    for (const auto& [e, c] : o.terms_) g.add(e.first, e.second, c);
    return g;
}

std::pair<GraphPolynomial, GraphPolynomial> lsm_graphs(const LsmCoefficients& co,
                                                       const std::map<std::pair<int, int>, double>& xddot,
                                                       double) {
    const std::size_t n = static_cast<std::size_t>(co.w20.size());
    GraphPolynomial h(n);
    h.add(2, 0, co.w20);
    h.add(0, 2, co.w02);
    h.add(3, 0, co.w30);
    h.add(1, 2, co.w12);
    const GraphPolynomial g = (h.d_dx().times({{{0, 1}, 1.0}}) + h.d_dxd().times(xddot)).truncated(3);
    return {h, g};
}

std::pair<GraphPolynomial, GraphPolynomial> ssm_graphs(const SsmCoefficients& co) {
    if (co.nu != 1) throw InputError("ssm_graphs: only nu = 1 is supported");
    const std::size_t n = co.modes.size();
    const Eigen::Index N = static_cast<Eigen::Index>(n);
    Eigen::VectorXd w11(N), w12(N), w22(N), t11(N), t12(N), t22(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto& m = co.modes[static_cast<std::size_t>(i)];
        w11[i] = m.w11();
        w12[i] = 2.0 * m.w12();
        w22[i] = m.w22();
        t11[i] = m.wt11();
        t12[i] = 2.0 * m.wt12();
        t22[i] = m.wt22();
    }
    GraphPolynomial h(n), g(n);
    h.add(2, 0, w11);
    h.add(1, 1, w12);
    h.add(0, 2, w22);
    g.add(2, 0, t11);
    g.add(1, 1, t12);
    g.add(0, 2, t22);
    return {h, g};
}

namespace {

using Accel = std::function<void(const std::vector<double>&, double&, Eigen::VectorXd&)>;

std::map<std::pair<int, int>, double> xddot_poly(double w0, double zeta, const NonlinearForm& R, double scale) {
    std::map<std::pair<int, int>, double> p{{{1, 0}, -w0 * w0}};
    if (zeta != 0.0) p[{0, 1}] = -2.0 * zeta * w0;
    for (const auto& [j, k] : {std::pair{2, 0}, std::pair{1, 1}, std::pair{0, 2}}) {
        const double c = R.pure(j, k)[0];
        if (c != 0.0) p[{j, k}] = -c * scale;
    }
    return p;
}

// Max of the position-graph and velocity-graph mismatch on the amplitude circle.
double graph_residual(std::size_t n, const GraphPolynomial& h, const GraphPolynomial& g, const Accel& accel,
                      double amplitude, double omega) {
    double worst = 0.0;
    std::vector<double> z(2 + 2 * n);
    Eigen::VectorXd yddot;
    for (int p = 0; p < 16; ++p) {
        const double th = 2.0 * std::numbers::pi * p / 16.0;
        const double x = amplitude * std::cos(th), xd = -amplitude * omega * std::sin(th);
        const Eigen::VectorXd y = h.eval(x, xd), yd = g.eval(x, xd);
        z[0] = x;
        z[1] = xd;
        for (std::size_t i = 0; i < n; ++i) {
            z[2 + i] = y[static_cast<Eigen::Index>(i)];
            z[2 + n + i] = yd[static_cast<Eigen::Index>(i)];
        }
        double xdd = 0.0;
        accel(z, xdd, yddot);
        const Eigen::VectorXd r1 = h.d_dx().eval(x, xd) * xd + h.d_dxd().eval(x, xd) * xdd - yd;
        const Eigen::VectorXd r2 = g.d_dx().eval(x, xd) * xd + g.d_dxd().eval(x, xd) * xdd - yddot;
        worst = std::max({worst, r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>()});
    }
    return worst;
}

Accel partitioned_accel(const MechanicalSystem& sys) {
    auto rhs = partitioned_rhs(sys);
    const std::size_t n = sys.n();
    return [rhs, n](const std::vector<double>& z, double& xdd, Eigen::VectorXd& ydd) {
        std::vector<double> dz(z.size());
        rhs(0.0, z.data(), dz.data());
        xdd = dz[1];
        ydd = Eigen::Map<const Eigen::VectorXd>(dz.data() + 2 + n, static_cast<Eigen::Index>(n));
    };
}

Accel modal_accel(const ModalSystem& ms) {
    auto rhs = modal_rhs(ms);
    const std::size_t n = ms.n();
    return [rhs, n](const std::vector<double>& z, double& xdd, Eigen::VectorXd& ydd) {
        std::vector<double> dz(z.size());
        rhs(0.0, z.data(), dz.data());
        xdd = dz[1];
        ydd = Eigen::Map<const Eigen::VectorXd>(dz.data() + 2 + n, static_cast<Eigen::Index>(n));
    };
}

MechanicalSystem autonomous(MechanicalSystem sys) {
    sys.forcing.epsilon = 0.0;
    return sys;
}

ModalSystem autonomous(ModalSystem ms) {
    ms.epsilon = 0.0;
    return ms;
}

}  // namespace

double invariance_residual(const MechanicalSystem& sys_in, const LsmCoefficients& co, double amplitude) {
    if (co.frame != Frame::general) throw InputError("invariance_residual: expected general-frame LSM coefficients");
    const MechanicalSystem sys = autonomous(sys_in);
    const double w = std::sqrt(sys.k / sys.m);
    const double zeta = sys.c / (2.0 * sys.m * w);
    const auto [h, g] = lsm_graphs(co, xddot_poly(w, zeta, sys.P, 1.0 / sys.m), w);
    return graph_residual(sys.n(), h, g, partitioned_accel(sys), amplitude, w);
}

double invariance_residual(const ModalSystem& ms_in, const LsmCoefficients& co, double amplitude) {
    if (co.frame != Frame::modal) throw InputError("invariance_residual: expected modal-frame LSM coefficients");
    const ModalSystem ms = autonomous(ms_in);
    const auto [h, g] = lsm_graphs(co, xddot_poly(ms.omega0, ms.zeta, ms.R, 1.0), ms.omega0);
    return graph_residual(ms.n(), h, g, modal_accel(ms), amplitude, ms.omega0);
}

double invariance_residual(const ModalSystem& ms_in, const SsmCoefficients& co, double amplitude) {
    const ModalSystem ms = autonomous(ms_in);
    const auto [h, g] = ssm_graphs(co);
    return graph_residual(ms.n(), h, g, modal_accel(ms), amplitude, ms.omega0);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("loglog_slope: need at least two paired samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("loglog_slope: samples must be positive");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> manifold_distance(const Trajectory& tr, const SsmCoefficients& co, const ModalSystem& ms) {
    const std::size_t n = ms.n();
    std::vector<double> out;
    out.reserve(tr.size());
    for (std::size_t s = 0; s < tr.size(); ++s) {
        const auto& z = tr.states[s];
        if (z.size() != 2 + 2 * n) throw InputError("manifold_distance: trajectory is not in partitioned coordinates");
        const auto [y, yd] = ssm_manifold_eval(co, ms, z[0], z[1], ms.Omega * tr.t[s], ms.epsilon);
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = z[2 + i] - y[static_cast<Eigen::Index>(i)];
            const double b = z[2 + n + i] - yd[static_cast<Eigen::Index>(i)];
            d2 += a * a + b * b;
        }
        out.push_back(std::sqrt(d2));
    }
    return out;
}

Trajectory to_partitioned(const Trajectory& full, const Eigen::MatrixXd& basis) {
    const Eigen::Index N = basis.rows();
    if (basis.cols() != N) throw InputError("to_partitioned: basis must be square");
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
    Trajectory out;
    out.t = full.t;
    out.meta = full.meta;
    const std::size_t n = static_cast<std::size_t>(N) - 1;
    for (const auto& z : full.states) {
        if (z.size() != static_cast<std::size_t>(2 * N)) throw InputError("to_partitioned: dimension mismatch");
        const Eigen::VectorXd p = lu.solve(Eigen::Map<const Eigen::VectorXd>(z.data(), N));
        const Eigen::VectorXd v = lu.solve(Eigen::Map<const Eigen::VectorXd>(z.data() + N, N));
        std::vector<double> s(2 + 2 * n);
        s[0] = p[0];
        s[1] = v[0];
        for (std::size_t i = 0; i < n; ++i) {
            s[2 + i] = p[static_cast<Eigen::Index>(i + 1)];
            s[2 + n + i] = v[static_cast<Eigen::Index>(i + 1)];
        }
        out.states.push_back(std::move(s));
    }
    return out;
}

double envelope_decay_rate(const std::vector<double>& t, const std::vector<double>& d, double floor_fraction) {
    if (t.size() != d.size() || t.size() < 3) throw InputError("envelope_decay_rate: need at least three samples");
    std::vector<double> tp, lp;
    double first = 0.0;
    for (std::size_t i = 1; i + 1 < d.size(); ++i) {
        if (d[i] >= d[i - 1] && d[i] > d[i + 1] && d[i] > 0.0) {
            if (tp.empty()) first = d[i];
            if (d[i] < floor_fraction * first) break;
            tp.push_back(t[i]);
            lp.push_back(std::log(d[i]));
        }
    }
    if (tp.size() < 3) throw NumericalError("envelope_decay_rate: fewer than three envelope maxima");
    double st = 0, sl = 0, stt = 0, stl = 0;
    const double n = static_cast<double>(tp.size());
    for (std::size_t i = 0; i < tp.size(); ++i) {
        st += tp[i];
        sl += lp[i];
        stt += tp[i] * tp[i];
        stl += tp[i] * lp[i];
    }
    return (n * stl - st * sl) / (n * stt - st * st);
}

double max_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double median_wall_time(const std::function<void()>& fn, int runs) {
    if (runs < 1) throw InputError("median_wall_time: runs must be positive");
    std::vector<double> times;
    for (int r = 0; r < runs; ++r) {
        const auto s = std::chrono::steady_clock::now();
        fn();
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - s).count());
    }
    std::sort(times.begin(), times.end());
    const std::size_t m = times.size() / 2;
    return times.size() % 2 ? times[m] : 0.5 * (times[m - 1] + times[m]);
}

std::string trajectory_csv(const Trajectory& tr, bool reduced_only) {
    const std::size_t dim = tr.dim();
    const std::size_t n = (reduced_only || dim <= 2) ? 0 : (dim - 2) / 2;
    std::vector<std::string> header{"t", "x", "xdot"};
    for (std::size_t i = 0; i < n; ++i) header.push_back("y" + std::to_string(i + 1));
    for (std::size_t i = 0; i < n; ++i) header.push_back("ydot" + std::to_string(i + 1));
    CsvWriter w(header);
    for (std::size_t s = 0; s < tr.size(); ++s) {
        w.row() << tr.t[s];
        const auto& z = tr.states[s];
        for (std::size_t c = 0; c < 2 + 2 * n; ++c) w << z[c];
    }
    return w.str();
}

}  // namespace ssmreduce
