#include "ssmreduce/analysis.hpp"

#include "ssmreduce/error.hpp"
#include "ssmreduce/io.hpp"
#include "ssmreduce/sim.hpp"

#include <algorithm>
#include <array>
#include <exception>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

namespace ssmreduce {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

double backbone_coefficient(const LsmModel& m) {
    const double w = m.omega0;
    if (!(w > 0.0) || !std::isfinite(w)) throw InputError("backbone: omega0 must be positive");
    return (9.0 * m.a3 * w * w - 10.0 * m.a2 * m.a2 + 3.0 * m.b12 * w * w * w * w) / (24.0 * w * w * w);
}

BackboneCurve backbone_curve(const LsmModel& model, double r_max, int steps) {
    if (!(r_max >= 0.0)) throw InputError("backbone: r_max must be non-negative");
    if (steps < 1) throw InputError("backbone: steps must be positive");
    BackboneCurve bc;
    bc.omega0 = model.omega0;
    bc.omega1 = backbone_coefficient(model);
    bc.method = "second-order formula";
    const int n = r_max == 0.0 ? 0 : steps;
    for (int i = 0; i <= n; ++i) {
        const double r = n == 0 ? 0.0 : r_max * i / n;
        bc.samples.push_back({r, bc.omega0 + bc.omega1 * r * r, 0.0});
    }
    return bc;
}

namespace {

BackboneSample shoot_one(const LsmModel& model, double r, const ShootingOptions& opts) {
    if (r == 0.0) return {0.0, model.omega0, 0.0};
    const double T0 = two_pi / model.omega0;
    IntegratorOptions io;
    io.rtol = opts.rtol;
    io.atol = opts.atol * std::max(1.0, r);
    const auto ev = integrate_events(lsm_rhs(model), {r, 0.0}, 0.0, 10.0 * T0,
                                     [](double, const double* z) { return z[1]; }, -1, 1, io, 1e-13);
    if (ev.empty() || !(ev.front().state[0] > 0.0)) {
        std::ostringstream os;
        os << "orbit escaped: no return to the section within 10 linear periods at r = " << r;
        throw NumericalError(os.str());
    }
    return {r, two_pi / ev.front().t, std::abs(ev.front().state[0] - r)};
}

}  // namespace

BackboneCurve shooting_backbone(const LsmModel& model, const std::vector<double>& r_list,
                                const ShootingOptions& opts) {
    if (!(model.omega0 > 0.0)) throw InputError("shooting: omega0 must be positive");
    for (std::size_t i = 0; i < r_list.size(); ++i) {
        if (!(r_list[i] >= 0.0)) throw InputError("shooting: amplitudes must be non-negative");
        if (i && !(r_list[i] > r_list[i - 1])) throw InputError("shooting: amplitudes must be strictly increasing");
    }
    BackboneCurve bc;
    bc.omega0 = model.omega0;
    bc.omega1 = backbone_coefficient(model);
    bc.method = "shooting";
    bc.samples.resize(r_list.size());
    const std::size_t nt =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, opts.threads)), 1, std::max<std::size_t>(1, r_list.size()));
    std::vector<std::exception_ptr> errors(nt);
    auto work = [&](std::size_t w) {
        try {
            for (std::size_t i = w; i < r_list.size(); i += nt) bc.samples[i] = shoot_one(model, r_list[i], opts);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (nt == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < nt; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return bc;
}

Eigen::VectorXd nonmodeling_amplitude(const LsmCoefficients& co, double r) { return co.w20.cwiseAbs() * (r * r); }

double energy_at_amplitude(const MechanicalSystem& sys, const PotentialFn& V, const LsmCoefficients& co, double r,
                           const Eigen::MatrixXd& Phi2) {
    if (!V) throw PreconditionError("energy: no potential declared");
    Eigen::VectorXd w = co.w20 * (r * r) + co.w30 * (r * r * r);
    if (co.frame == Frame::modal) {
        if (Phi2.rows() != w.size()) throw InputError("energy: modal coefficients need the modal matrix Phi2");
        w = Phi2 * w;
    }
    if (w.size() != static_cast<Eigen::Index>(sys.n())) throw InputError("energy: coefficient dimension mismatch");
    Eigen::VectorXd q(w.size() + 1);
    q[0] = r;
    q.tail(w.size()) = w;
    // At xdot = 0 the chain rule gives ydot = 0, so the kinetic term vanishes.
    return V(q);
}

FrequencyEnergyCurve frequency_energy(const MechanicalSystem& sys, const PotentialFn& V, const LsmCoefficients& co,
                                      const BackboneCurve& bb, const Eigen::MatrixXd& Phi2) {
    FrequencyEnergyCurve fe;
    fe.method = bb.method;
    for (const auto& s : bb.samples) fe.samples.push_back({energy_at_amplitude(sys, V, co, s.r, Phi2), s.omega});
    for (std::size_t i = 1; i < fe.samples.size(); ++i)
        if (!(fe.samples[i].energy > fe.samples[i - 1].energy))
            throw NumericalError("frequency-energy: energy is not increasing with amplitude (outside validity range)");
    return fe;
}

std::string to_string(Direction d) { return d == Direction::up ? "up" : "down"; }

Direction direction_from_string(const std::string& s) {
    if (s == "up") return Direction::up;
    if (s == "down") return Direction::down;
    throw InputError("direction must be 'up' or 'down', got '" + s + "'");
}

double linear_response_amplitude(const SsmModel& m, double Om) {
    const double re = m.k - m.m * Om * Om, im = m.c * Om;
    return std::abs(m.epsilon * m.F1) / std::hypot(re, im);
}

namespace {

std::vector<double> omega_grid(double lo, double hi, int steps, Direction d) {
    if (!(lo > 0.0) || !(hi >= lo)) throw InputError("frc: need 0 < omega_min <= omega_max");
    if (steps < 1) throw InputError("frc: steps must be positive");
    std::vector<double> g = uniform_times(lo, hi, static_cast<std::size_t>(steps));
    if (d == Direction::down) std::reverse(g.begin(), g.end());
    return g;
}

void check_frc_model(const SsmModel& m) {
    if (!(m.m > 0.0) || !(m.k > 0.0)) throw InputError("frc: model needs positive mass and stiffness");
    if (m.c < 0.0) throw InputError("frc: negative damping");
}

// Integrates one forcing frequency to steady state; updates z and phase in place.
FrcSample steady_state(const SsmModel& model, double Om, std::vector<double>& z, double& phase,
                       const SweepOptions& opts) {
    SsmModel mm = model;
    mm.Omega = Om;
    const double T = two_pi / Om;
    const double t0 = phase / Om;
    IntegratorOptions io;
    io.rtol = opts.rtol;
    io.atol = opts.atol;
    auto stepper = make_stepper(ssm_rhs(mm), 2, io);
    stepper->initialize(z, t0, 0.0);
    std::vector<double> maxima;
    std::vector<double> a(2), b(2), m(2);
    double cur = std::abs(z[0]);
    double period_end = t0 + T;
    double seg_start = t0;
    std::vector<double> za = z;
    bool converged = false;
    const auto extremum = [&](double lo, double hi, double vlo) {
        for (int it = 0; it < 60 && hi - lo > 1e-9 * T; ++it) {
            const double mid = 0.5 * (lo + hi);
            stepper->state_at(mid, m);
            if ((m[1] > 0.0) == (vlo > 0.0)) {
                lo = mid;
                vlo = m[1];
            } else {
                hi = mid;
            }
        }
        stepper->state_at(0.5 * (lo + hi), m);
        return std::abs(m[0]);
    };
    while (!converged) {
        const auto [ta, tb] = stepper->step();
        (void)ta;
        // Sub-intervals split at period boundaries.
        while (true) {
            const double seg_end = std::min(tb, period_end);
            stepper->state_at(seg_end, b);
            if (za[1] != 0.0 && (b[1] > 0.0) != (za[1] > 0.0)) cur = std::max(cur, extremum(seg_start, seg_end, za[1]));
            cur = std::max(cur, std::abs(b[0]));
            seg_start = seg_end;
            za = b;
            if (seg_end < period_end) break;
            maxima.push_back(cur);
            cur = std::abs(b[0]);
            z = b;
            phase = std::fmod(Om * period_end, two_pi);
            period_end += T;
            const int np = static_cast<int>(maxima.size());
            if (np >= std::max(opts.min_periods, opts.window)) {
                const auto first = maxima.end() - opts.window;
                const auto [mn, mx] = std::minmax_element(first, maxima.end());
                if (*mx - *mn <= opts.steady_tol * std::max(*mx, 1e-300) || *mx == 0.0) {
                    converged = true;
                    break;
                }
            }
            if (np >= opts.max_periods) break;
        }
        if (static_cast<int>(maxima.size()) >= opts.max_periods) break;
    }
    return {Om, maxima.empty() ? 0.0 : maxima.back(), converged, converged};
}

}  // namespace

ForcedResponseCurve frc_sweep(const SsmModel& model, double lo, double hi, int steps, Direction d,
                              const SweepOptions& opts) {
    check_frc_model(model);
    if (opts.window < 2 || opts.max_periods < opts.window) throw InputError("frc: invalid steady-state window");
    ForcedResponseCurve frc;
    frc.epsilon = model.epsilon;
    frc.F1 = model.F1;
    frc.method = "sweep";
    frc.direction = d;
    std::vector<double> z{0.0, 0.0};
    double phase = 0.0;
    for (double Om : omega_grid(lo, hi, steps, d)) {
        if (model.epsilon * model.F1 == 0.0 && z[0] == 0.0 && z[1] == 0.0) {
            frc.samples.push_back({Om, 0.0, true, true});
            continue;
        }
        FrcSample s = steady_state(model, Om, z, phase, opts);
        if (!s.converged) {
            std::ostringstream os;
            os << "Omega = " << fmt17(Om) << ": no steady state within " << opts.max_periods << " periods";
            frc.diagnostics.push_back(os.str());
        }
        frc.samples.push_back(s);
    }
    return frc;
}

namespace {

struct HbEval {
    Eigen::Vector3d R;
    Eigen::Matrix<double, 3, 4> J;  // columns a0, a, b, Omega
};

HbEval hb_eval(const SsmModel& md, const Eigen::Vector4d& u, int nq) {
    const double a0 = u[0], a = u[1], b = u[2], Om = u[3];
    const std::array<double, 4> cb{md.cubic(0), md.cubic(1), md.cubic(2), md.cubic(3)};
    HbEval e;
    e.R.setZero();
    e.J.setZero();
    for (int q = 0; q < nq; ++q) {
        const double th = two_pi * q / nq, c = std::cos(th), s = std::sin(th);
        const double x = a0 + a * c + b * s, v = Om * (-a * s + b * c), osc = a * c + b * s;
        const double N = md.x2 * x * x + md.xxd * x * v + md.xd2 * v * v + cb[0] * x * x * x + cb[1] * x * x * v +
                         cb[2] * x * v * v + cb[3] * v * v * v;
        const double Nx = 2 * md.x2 * x + md.xxd * v + 3 * cb[0] * x * x + 2 * cb[1] * x * v + cb[2] * v * v;
        const double Nv = md.xxd * x + 2 * md.xd2 * v + cb[1] * x * x + 2 * cb[2] * x * v + 3 * cb[3] * v * v;
        const double R = -md.m * Om * Om * osc + md.c * v + md.k * x + N - md.epsilon * md.F1 * s;
        const double kx = md.k + Nx, cv = md.c + Nv;
        const Eigen::Vector4d dR(kx, (kx - md.m * Om * Om) * c - cv * Om * s, (kx - md.m * Om * Om) * s + cv * Om * c,
                                 -2.0 * md.m * Om * osc + cv * v / Om);
        const Eigen::Vector3d w(1.0 / nq, 2.0 * c / nq, 2.0 * s / nq);
        e.R += w * R;
        e.J += w * dR.transpose();
    }
    return e;
}

bool hb_stable(const SsmModel& md, const HbEval& e, double Om) {
    // Slow flow of (a, b) with the mean term slaved to its static balance.
    const double d0 = e.J(0, 0);
    auto total = [&](int row, int col) { return e.J(row, col) - (d0 != 0.0 ? e.J(row, 0) * e.J(0, col) / d0 : 0.0); };
    Eigen::Matrix2d J;
    J << total(2, 1), total(2, 2), -total(1, 1), -total(1, 2);
    J /= 2.0 * md.m * Om;
    return J.trace() < 0.0 && J.determinant() > 0.0;
}

}  // namespace

ForcedResponseCurve frc_harmonic_balance(const SsmModel& md, double lo, double hi, const HarmonicBalanceOptions& o) {
    check_frc_model(md);
    if (!(lo > 0.0) || !(hi > lo)) throw InputError("frc: need 0 < omega_min < omega_max");
    if (o.quadrature < 8) throw InputError("frc: harmonic-balance quadrature needs at least 8 points");
    ForcedResponseCurve frc;
    frc.epsilon = md.epsilon;
    frc.F1 = md.F1;
    frc.method = "harmonic-balance";
    const double F = md.epsilon * md.F1;
    if (F == 0.0) {
        for (double Om : uniform_times(lo, hi, 101)) frc.samples.push_back({Om, 0.0, md.c > 0.0, true});
        return frc;
    }
    const double wn = md.omega0();
    const double Aref = std::max({linear_response_amplitude(md, lo), linear_response_amplitude(md, hi),
                                  linear_response_amplitude(md, std::clamp(wn, lo, hi))});
    const Eigen::Vector4d scale(Aref, Aref, Aref, hi - lo);

    Eigen::Vector4d u;
    {
        const double re = md.k - md.m * lo * lo, im = md.c * lo, den = re * re + im * im;
        u << 0.0, -F * im / den, F * re / den, lo;
    }
    // Fixed-Omega corrector for the seed.
    for (int it = 0; it < 50; ++it) {
        const HbEval e = hb_eval(md, u, o.quadrature);
        const Eigen::Vector3d du = e.J.leftCols<3>().fullPivLu().solve(-e.R);
        u.head<3>() += du;
        if (du.norm() <= o.newton_tol * Aref) break;
        if (it == 49) throw NumericalError("harmonic balance: seed did not converge");
    }
    auto record = [&](const Eigen::Vector4d& v) {
        const HbEval e = hb_eval(md, v, o.quadrature);
        frc.samples.push_back({v[3], std::abs(v[0]) + std::hypot(v[1], v[2]), hb_stable(md, e, v[3]), true});
    };
    record(u);
    auto tangent = [&](const Eigen::Vector4d& v) {
        const HbEval e = hb_eval(md, v, o.quadrature);
        const Eigen::Matrix<double, 3, 4> Js = e.J * scale.asDiagonal();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Js, Eigen::ComputeFullV);
        Eigen::Vector4d t = svd.matrixV().col(3);
        return Eigen::Vector4d(t.normalized());
    };
    Eigen::Vector4d t = tangent(u);
    if (t[3] < 0.0) t = -t;
    double ds = o.ds;
    while (static_cast<int>(frc.samples.size()) < o.max_points) {
        const Eigen::Vector4d us = u.cwiseQuotient(scale);
        Eigen::Vector4d vs = us + ds * t;
        bool ok = false;
        int iters = 0;
        for (; iters < 15; ++iters) {
            const Eigen::Vector4d v = vs.cwiseProduct(scale);
            if (!(v[3] > 0.0)) break;
            const HbEval e = hb_eval(md, v, o.quadrature);
            Eigen::Matrix4d A;
            A.topRows<3>() = e.J * scale.asDiagonal();
            A.row(3) = t.transpose();
            Eigen::Vector4d rhs;
            rhs.head<3>() = -e.R;
            rhs[3] = -(t.dot(vs - us) - ds);
            const Eigen::Vector4d dv = A.fullPivLu().solve(rhs);
            if (!dv.allFinite()) break;
            vs += dv;
            if (dv.norm() <= 1e-11) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            ds *= 0.5;
            if (ds < o.ds_min) {
                frc.diagnostics.push_back("harmonic balance: Newton corrector diverged near Omega = " + fmt17(u[3]));
                break;
            }
            continue;
        }
        const Eigen::Vector4d un = vs.cwiseProduct(scale);
        Eigen::Vector4d tn = tangent(un);
        if (tn.dot(t) < 0.0) tn = -tn;
        u = un;
        t = tn;
        if (u[3] > hi || u[3] < lo) break;
        record(u);
        if (iters <= 3) ds = std::min(o.ds_max, 1.5 * ds);
    }
    if (static_cast<int>(frc.samples.size()) >= o.max_points)
        frc.diagnostics.push_back("harmonic balance: maximum number of continuation points reached");
    return frc;
}

double frc_agreement(const ForcedResponseCurve& sweep, const ForcedResponseCurve& hb) {
    double worst = 0.0;
    for (const auto& s : sweep.samples) {
        if (!s.converged) continue;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < hb.samples.size(); ++i) {
            const auto& p = hb.samples[i];
            const auto& q = hb.samples[i + 1];
            if (!p.stable || !q.stable) continue;
            const double lo = std::min(p.Omega, q.Omega), hi = std::max(p.Omega, q.Omega);
            if (s.Omega < lo || s.Omega > hi) continue;
            const double w = hi > lo ? (s.Omega - p.Omega) / (q.Omega - p.Omega) : 0.0;
            const double A = p.amplitude + w * (q.amplitude - p.amplitude);
            best = std::min(best, std::abs(s.amplitude - A) / std::max(A, 1e-300));
        }
        if (std::isfinite(best)) worst = std::max(worst, best);
    }
    return worst;
}

double frc_peak_frequency(const ForcedResponseCurve& frc) {
    if (frc.samples.empty()) throw InputError("frc: empty curve");
    const auto it = std::max_element(frc.samples.begin(), frc.samples.end(),
                                     [](const FrcSample& a, const FrcSample& b) { return a.amplitude < b.amplitude; });
    return it->Omega;
}

std::string backbone_csv(const std::vector<BackboneCurve>& curves) {
    CsvWriter w({"r", "omega", "method"});
    for (const auto& c : curves)
        for (const auto& s : c.samples) w.row() << s.r << s.omega << c.method;
    return w.str();
}

std::string frc_csv(const std::vector<ForcedResponseCurve>& curves) {
    CsvWriter w({"Omega", "amplitude", "stable", "direction", "method"});
    for (const auto& c : curves)
        for (const auto& s : c.samples)
            w.row() << s.Omega << s.amplitude << s.stable << (c.method == "sweep" ? to_string(c.direction) : "both")
                    << c.method;
    return w.str();
}

std::string frequency_energy_csv(const FrequencyEnergyCurve& curve) {
    CsvWriter w({"energy", "omega"});
    for (const auto& s : curve.samples) w.row() << s.energy << s.omega;
    return w.str();
}

}  // namespace ssmreduce
