#include "ssmreduce/spectrum.hpp"

#include "ssmreduce/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace ssmreduce {

void sort_spectrum(std::vector<Complex>& l) {
    std::stable_sort(l.begin(), l.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        if (std::abs(a.imag()) != std::abs(b.imag())) return std::abs(a.imag()) < std::abs(b.imag());
        return a.imag() > b.imag();
    });
}

std::vector<Complex> quadratic_eigenvalues(const Eigen::MatrixXd& M, const Eigen::MatrixXd& C,
                                           const Eigen::MatrixXd& K) {
    const Eigen::Index n = M.rows();
    const Eigen::LLT<Eigen::MatrixXd> llt(M);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    A.topRightCorner(n, n).setIdentity();
    A.bottomLeftCorner(n, n) = -llt.solve(K);
    A.bottomRightCorner(n, n) = -llt.solve(C);
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    if (es.info() != Eigen::Success) throw NumericalError("quadratic eigenproblem: solver failed");
    std::vector<Complex> out;
    const bool undamped = C.isZero(0.0);
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        Complex l = es.eigenvalues()[i];
        if (undamped) l = Complex(0.0, l.imag());
        out.push_back(l);
    }
    sort_spectrum(out);
    return out;
}

int integer_part(double ratio) {
    const double r = std::round(ratio);
    if (std::abs(ratio - r) <= 1e-9 * std::max(1.0, std::abs(ratio))) return static_cast<int>(r);
    return static_cast<int>(std::floor(ratio));
}

namespace {

void finish(Spectrum& s) {
    sort_spectrum(s.lambda_x);
    sort_spectrum(s.lambda_y);
    const auto all_zero = [](const std::vector<Complex>& l) {
        return std::all_of(l.begin(), l.end(), [](const Complex& z) { return z.real() == 0.0; });
    };
    s.conservative = all_zero(s.lambda_x) && all_zero(s.lambda_y);
    for (std::size_t i = 0; i < s.lambda_y.size(); ++i)
        if (s.lambda_y[i].imag() == 0.0) {
            s.diagnostics.push_back("overdamped non-modeling mode (real eigenvalue " +
                                    std::to_string(s.lambda_y[i].real()) + ")");
            break;
        }
    const double slow_x = s.lambda_x.front().real();
    const double fast_x = s.lambda_x.back().real();
    if (s.conservative) {
        s.diagnostics.push_back("conservative: sigma not applicable");
        return;
    }
    if (slow_x >= 0.0) {
        s.diagnostics.push_back("undamped modeling mode: sigma not applicable");
        return;
    }
    if (!s.lambda_y.empty() && s.lambda_y.front().real() >= fast_x) {
        s.slow_subspace_ok = false;
        s.diagnostics.push_back("slow-subspace violation: a non-modeling mode decays no faster than the modeling mode");
    }
    if (!s.lambda_y.empty()) s.sigma = integer_part(s.lambda_y.back().real() / slow_x);
}

}  // namespace

Spectrum compute_spectrum(const MechanicalSystem& sys) {
    Spectrum s;
    s.lambda_x = quadratic_eigenvalues(Eigen::MatrixXd::Constant(1, 1, sys.m),
                                       Eigen::MatrixXd::Constant(1, 1, sys.c),
                                       Eigen::MatrixXd::Constant(1, 1, sys.k));
    s.lambda_y = quadratic_eigenvalues(sys.M, sys.C, sys.K);
    finish(s);
    return s;
}

Spectrum spectrum_from_modal(double omega0, double zeta, const Eigen::VectorXd& omega,
                             const Eigen::VectorXd& zeta_vec) {
    auto pair = [](double w, double z, std::vector<Complex>& out) {
        if (z < 1.0) {
            const double im = w * std::sqrt(1.0 - z * z);
            out.emplace_back(-z * w, im);
            out.emplace_back(-z * w, -im);
        } else {
            const double d = w * std::sqrt(z * z - 1.0);
            out.emplace_back(-z * w + d, 0.0);
            out.emplace_back(-z * w - d, 0.0);
        }
    };
    Spectrum s;
    pair(omega0, zeta, s.lambda_x);
    for (Eigen::Index i = 0; i < omega.size(); ++i) pair(omega[i], zeta_vec[i], s.lambda_y);
    finish(s);
    return s;
}

ResonanceReport check_lsm_nonresonance(const Spectrum& spec, double tol) {
    ResonanceReport rep;
    if (!spec.conservative) rep.warnings.push_back("spectrum is not conservative; using imaginary parts");
    double w = 0.0;
    for (const Complex& l : spec.lambda_x) w = std::max(w, l.imag());
    if (w <= 0.0) {
        rep.warnings.push_back("modeling frequency is zero");
        return rep;
    }
    std::size_t mode = 0;
    for (const Complex& l : spec.lambda_y) {
        if (l.imag() <= 0.0) continue;
        ++mode;
        const double ratio = l.imag() / w;
        const double nearest = std::round(ratio);
        const double dist = std::abs(ratio - nearest);
        rep.distances.push_back(dist);
        if (dist < tol)
            rep.flags.push_back({mode, "1:" + std::to_string(static_cast<long>(nearest)), ratio, dist,
                                 dist <= 1e-12 * std::max(1.0, ratio)});
    }
    return rep;
}

ResonanceReport check_ssm_nonresonance(const Spectrum& spec, double tol, int sigma_cap) {
    ResonanceReport rep;
    if (!spec.sigma) {
        rep.warnings.push_back("spectral quotient undefined; nothing to enumerate");
        return rep;
    }
    int sigma = *spec.sigma;
    if (sigma > sigma_cap) {
        rep.truncated = true;
        rep.warnings.push_back("spectral quotient " + std::to_string(sigma) +
                               " exceeds cap; enumeration truncated at " + std::to_string(sigma_cap));
        sigma = sigma_cap;
    }
    // Attainable sums of real parts over integer combinations with order 2..sigma.
    std::vector<double> re;
    for (const Complex& l : spec.lambda_x) re.push_back(l.real());
    std::set<std::pair<int, double>> combos;  // (order, value)
    std::function<void(std::size_t, int, double)> rec = [&](std::size_t idx, int order, double value) {
        if (idx == re.size()) {
            if (order >= 2) combos.emplace(order, value);
            return;
        }
        for (int m = 0; order + m <= sigma; ++m) rec(idx + 1, order + m, value + m * re[idx]);
    };
    rec(0, 0, 0.0);

    std::size_t mode = 0;
    for (std::size_t i = 0; i < spec.lambda_y.size(); ++i) {
        const Complex& l = spec.lambda_y[i];
        if (l.imag() < 0.0) continue;
        ++mode;
        const double ry = l.real();
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [order, value] : combos) {
            const double margin = std::abs(ry - value) / std::max(std::abs(ry), 1e-300);
            best = std::min(best, margin);
            if (margin < tol)
                rep.flags.push_back({mode, "order " + std::to_string(order), value / spec.lambda_x.front().real(),
                                     margin, margin <= 1e-12});
        }
        rep.distances.push_back(best);
    }
    return rep;
}

nlohmann::json to_json(const Spectrum& spec) {
    auto list = [](const std::vector<Complex>& l) {
        nlohmann::json a = nlohmann::json::array();
        for (const Complex& z : l) a.push_back({z.real(), z.imag()});
        return a;
    };
    nlohmann::json j = {{"lambda_x", list(spec.lambda_x)},
                        {"lambda_y", list(spec.lambda_y)},
                        {"conservative", spec.conservative},
                        {"slow_subspace_ok", spec.slow_subspace_ok},
                        {"diagnostics", spec.diagnostics}};
    j["sigma"] = spec.sigma ? nlohmann::json(*spec.sigma) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const ResonanceReport& r) {
    nlohmann::json flags = nlohmann::json::array();
    for (const auto& f : r.flags)
        flags.push_back({{"mode", f.mode}, {"kind", f.kind}, {"ratio", f.ratio}, {"margin", f.margin}, {"hard", f.hard}});
    return {{"passed", r.passed()}, {"flags", flags}, {"distances", r.distances},
            {"warnings", r.warnings}, {"truncated", r.truncated}};
}

}  // namespace ssmreduce
