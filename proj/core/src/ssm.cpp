#include "ssmreduce/ssm.hpp"

#include "ssmreduce/error.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace ssmreduce {

Eigen::Matrix3d ssm_L_matrix(double z, double w, double zi, double wi) {
    Eigen::Matrix3d L;
    const double w2 = w * w;
    L(0, 0) = 2.0 * w2 - wi * wi;
    L(0, 1) = 4.0 * w2 * (zi * wi - z * w);
    L(0, 2) = -2.0 * w2 * w2;
    L(1, 0) = 2.0 * (z * w - zi * wi);
    L(1, 1) = 4.0 * zi * wi * z * w - 4.0 * w2 * (z * z - 1.0) - wi * wi;
    L(1, 2) = 2.0 * zi * wi * w2 - 6.0 * z * w2 * w;
    L(2, 0) = -2.0;
    L(2, 1) = 4.0 * (3.0 * z * w - zi * wi);
    L(2, 2) = 2.0 * w2 - wi * wi + 8.0 * zi * wi * z * w - 16.0 * (z * w) * (z * w);
    return L;
}

double ssm_det(double z, double w, double zi, double wi) {
    const double w2 = w * w, wi2 = wi * wi;
    return -(4.0 * z * z * w2 - 4.0 * z * zi * w * wi + wi2) *
           (8.0 * w2 * wi2 * (2.0 * z * z + 2.0 * zi * zi - 1.0) - 32.0 * z * zi * w2 * w * wi -
            8.0 * z * zi * w * wi2 * wi + 16.0 * w2 * w2 + wi2 * wi2);
}

double ssm_det_margin(double z, double w, double zi, double wi) {
    const Eigen::Matrix3d L = ssm_L_matrix(z, 1.0, zi, wi / w);
    return std::abs(L.determinant()) / std::pow(L.norm(), 3);
}

PeriodicCoefficient ssm_periodic_coeff(double zi, double wi, double Omega, double F) {
    const double a = wi * wi - Omega * Omega;
    const double b = 2.0 * zi * wi * Omega;
    const double den = a * a + b * b;
    if (den <= 1e-28 * (std::pow(wi, 4) + std::pow(Omega, 4))) {
        if (F == 0.0) return {};
        throw PreconditionError("unbounded periodic response: undamped mode forced at its natural frequency");
    }
    return {a * F / den, -b * F / den};
}

namespace {

// Linear modeling block and the map from modal state indices into z = [xi; xidot].
struct ModelingBlock {
    int nu = 1;
    Eigen::MatrixXd A;
    std::vector<int> zmap;
    std::vector<std::size_t> enslaved;
};

ModelingBlock modeling_block(const ModalSystem& ms, int nu) {
    if (nu < 1 || static_cast<std::size_t>(nu) > ms.n())
        throw InputError("ssm: modeling dimension nu must satisfy 1 <= nu <= n");
    ModelingBlock b;
    b.nu = nu;
    const Eigen::Index v = nu;
    Eigen::VectorXd w(v), z(v);
    w[0] = ms.omega0;
    z[0] = ms.zeta;
    for (Eigen::Index k = 1; k < v; ++k) {
        w[k] = ms.omega[k - 1];
        z[k] = ms.zeta_vec[k - 1];
    }
    b.A = Eigen::MatrixXd::Zero(2 * v, 2 * v);
    b.A.topRightCorner(v, v).setIdentity();
    b.A.bottomLeftCorner(v, v) = -Eigen::MatrixXd(w.cwiseAbs2().asDiagonal());
    b.A.bottomRightCorner(v, v) = -Eigen::MatrixXd((2.0 * z.cwiseProduct(w)).asDiagonal());
    const StateLayout L{ms.n()};
    b.zmap.assign(L.size(), -1);
    b.zmap[StateLayout::x] = 0;
    b.zmap[StateLayout::xd] = nu;
    for (int k = 1; k < nu; ++k) {
        b.zmap[L.y(static_cast<std::size_t>(k - 1))] = k;
        b.zmap[L.yd(static_cast<std::size_t>(k - 1))] = nu + k;
    }
    for (std::size_t i = static_cast<std::size_t>(nu - 1); i < ms.n(); ++i) b.enslaved.push_back(i);
    return b;
}

// Symmetric matrix of the quadratic part of S_i restricted to the modeling coordinates.
Eigen::MatrixXd quadratic_form(const ModalSystem& ms, const ModelingBlock& b, std::size_t mode) {
    const Eigen::Index d = 2 * b.nu;
    Eigen::MatrixXd Sq = Eigen::MatrixXd::Zero(d, d);
    for (const auto& [key, c] : ms.S.terms()) {
        if (key.degree() != 2) continue;
        const double val = c[static_cast<Eigen::Index>(mode)];
        if (val == 0.0) continue;
        std::vector<int> idx;
        bool inside = true;
        const auto& e = key.exponents();
        for (std::size_t a = 0; a < e.size(); ++a)
            for (int p = 0; p < e[a]; ++p) {
                if (b.zmap[a] < 0) inside = false;
                idx.push_back(b.zmap[a]);
            }
        if (!inside) continue;
        if (idx[0] == idx[1])
            Sq(idx[0], idx[0]) += val;
        else {
            Sq(idx[0], idx[1]) += 0.5 * val;
            Sq(idx[1], idx[0]) += 0.5 * val;
        }
    }
    return Sq;
}

Eigen::MatrixXd T(const Eigen::MatrixXd& W, const Eigen::MatrixXd& A) { return W * A + A.transpose() * W; }

// Unknown ordering: vech W11, vec W12 (row-major), vech W22.
std::vector<std::pair<int, int>> unknown_positions(int nu) {
    std::vector<std::pair<int, int>> pos;
    for (int r = 0; r < nu; ++r)
        for (int c = r; c < nu; ++c) pos.emplace_back(r, c);
    for (int r = 0; r < nu; ++r)
        for (int c = 0; c < nu; ++c) pos.emplace_back(r, nu + c);
    for (int r = 0; r < nu; ++r)
        for (int c = r; c < nu; ++c) pos.emplace_back(nu + r, nu + c);
    return pos;
}

Eigen::MatrixXd operator_apply(const Eigen::MatrixXd& W, const Eigen::MatrixXd& A, double zi, double wi) {
    const Eigen::MatrixXd TW = T(W, A);
    return T(TW, A) + 2.0 * zi * wi * TW + wi * wi * W;
}

SsmModeCoefficients split(const Eigen::MatrixXd& W, const Eigen::MatrixXd& A, int nu) {
    SsmModeCoefficients m;
    const Eigen::MatrixXd Wt = T(W, A);
    m.W11 = W.topLeftCorner(nu, nu);
    m.W12 = W.topRightCorner(nu, nu);
    m.W22 = W.bottomRightCorner(nu, nu);
    m.Wt11 = Wt.topLeftCorner(nu, nu);
    m.Wt12 = Wt.topRightCorner(nu, nu);
    m.Wt22 = Wt.bottomRightCorner(nu, nu);
    return m;
}

Eigen::MatrixXd join(const SsmModeCoefficients& m) {
    const Eigen::Index nu = m.W11.rows();
    Eigen::MatrixXd W(2 * nu, 2 * nu);
    W << m.W11, m.W12, m.W12.transpose(), m.W22;
    return W;
}

}  // namespace

double ssm_defining_residual(const ModalSystem& ms, int nu, std::size_t mode, const SsmModeCoefficients& c) {
    const ModelingBlock b = modeling_block(ms, nu);
    const Eigen::Index i = static_cast<Eigen::Index>(mode);
    const Eigen::MatrixXd B = operator_apply(join(c), b.A, ms.zeta_vec[i], ms.omega[i]);
    const Eigen::MatrixXd C = -quadratic_form(ms, b, mode);
    const double scale = std::max({B.norm(), C.norm(), 1e-300});
    return (B - C).norm() / scale;
}

SsmCoefficients ssm_coeffs_general(const ModalSystem& ms, int nu, const SsmOptions& opts) {
    const ModelingBlock b = modeling_block(ms, nu);
    const auto pos = unknown_positions(nu);
    const Eigen::Index m = static_cast<Eigen::Index>(pos.size());
    SsmCoefficients out;
    out.nu = nu;
    for (std::size_t mode : b.enslaved) {
        const Eigen::Index i = static_cast<Eigen::Index>(mode);
        const double zi = ms.zeta_vec[i], wi = ms.omega[i];
        Eigen::MatrixXd G(m, m);
        for (Eigen::Index col = 0; col < m; ++col) {
            Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2 * nu, 2 * nu);
            E(pos[static_cast<std::size_t>(col)].first, pos[static_cast<std::size_t>(col)].second) = 1.0;
            E(pos[static_cast<std::size_t>(col)].second, pos[static_cast<std::size_t>(col)].first) = 1.0;
            const Eigen::MatrixXd R = operator_apply(E, b.A, zi, wi);
            for (Eigen::Index row = 0; row < m; ++row)
                G(row, col) = R(pos[static_cast<std::size_t>(row)].first, pos[static_cast<std::size_t>(row)].second);
        }
        const Eigen::MatrixXd Sq = quadratic_form(ms, b, mode);
        Eigen::VectorXd rhs(m);
        for (Eigen::Index row = 0; row < m; ++row)
            rhs[row] = -Sq(pos[static_cast<std::size_t>(row)].first, pos[static_cast<std::size_t>(row)].second);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
        const double margin = svd.singularValues().minCoeff() / svd.singularValues().maxCoeff();
        if (margin < opts.singular_tol)
            throw PreconditionError("SSM resonance: assembled system is singular for non-modeling mode " +
                                    std::to_string(mode + 1));
        const Eigen::VectorXd sol = G.fullPivLu().solve(rhs);
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2 * nu, 2 * nu);
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto [r, c] = pos[static_cast<std::size_t>(k)];
            W(r, c) = sol[k];
            W(c, r) = sol[k];
        }
        SsmModeCoefficients mc = split(W, b.A, nu);
        mc.det_margin = margin;
        const double F = ms.Fhat2.size() > i ? ms.Fhat2[i] : 0.0;
        const PeriodicCoefficient pc = ssm_periodic_coeff(zi, wi, ms.Omega, F);
        mc.wbar_sin = pc.sin;
        mc.wbar_cos = pc.cos;
        const Eigen::MatrixXd B = operator_apply(W, b.A, zi, wi);
        mc.residual = (B + Sq).norm() / std::max({B.norm(), Sq.norm(), 1e-300});
        if (margin < opts.resonance_tol)
            out.warnings.push_back("mode " + std::to_string(mode + 1) + ": assembled-system margin " +
                                   std::to_string(margin) + " below resonance tolerance");
        out.modes.push_back(std::move(mc));
    }
    return out;
}

SsmCoefficients ssm_coeffs_1dof(const ModalSystem& ms, const SsmOptions& opts) {
    SsmCoefficients out;
    out.nu = 1;
    const Eigen::VectorXd s20 = ms.S.pure(2, 0);
    const Eigen::VectorXd s11 = ms.S.pure(1, 1);
    const Eigen::VectorXd s02 = ms.S.pure(0, 2);
    const double w = ms.omega0, z = ms.zeta;
    for (std::size_t mode = 0; mode < ms.n(); ++mode) {
        const Eigen::Index i = static_cast<Eigen::Index>(mode);
        const double zi = ms.zeta_vec[i], wi = ms.omega[i];
        const Eigen::Matrix3d L = ssm_L_matrix(z, w, zi, wi);
        const double margin = ssm_det_margin(z, w, zi, wi);
        if (margin < opts.singular_tol) {
            std::ostringstream os;
            os << "SSM 1:2 resonance breakdown: det L singular for non-modeling mode " << mode + 1
               << " (margin " << margin << ", omega_i/omega = " << wi / w << ")";
            throw PreconditionError(os.str());
        }
        const Eigen::Vector3d sol = L.fullPivLu().solve(Eigen::Vector3d(s20[i], 0.5 * s11[i], s02[i]));
        SsmModeCoefficients m;
        m.W11 = Eigen::MatrixXd::Constant(1, 1, sol[0]);
        m.W12 = Eigen::MatrixXd::Constant(1, 1, sol[1]);
        m.W22 = Eigen::MatrixXd::Constant(1, 1, sol[2]);
        m.Wt11 = Eigen::MatrixXd::Constant(1, 1, -2.0 * w * w * sol[1]);
        m.Wt12 = Eigen::MatrixXd::Constant(1, 1, sol[0] - 2.0 * z * w * sol[1] - w * w * sol[2]);
        m.Wt22 = Eigen::MatrixXd::Constant(1, 1, 2.0 * sol[1] - 4.0 * z * w * sol[2]);
        m.det_margin = margin;
        const double F = ms.Fhat2.size() > i ? ms.Fhat2[i] : 0.0;
        const PeriodicCoefficient pc = ssm_periodic_coeff(zi, wi, ms.Omega, F);
        m.wbar_sin = pc.sin;
        m.wbar_cos = pc.cos;
        m.residual = ssm_defining_residual(ms, 1, mode, m);
        if (margin < opts.resonance_tol) {
            std::ostringstream os;
            os << "mode " << mode + 1 << ": det L margin " << margin
               << " below resonance tolerance (near 1:2 resonance, omega_i/omega = " << wi / w << ")";
            out.warnings.push_back(os.str());
        }
        out.modes.push_back(std::move(m));
    }
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ssm_manifold_eval_modal(const SsmCoefficients& c,
                                                                    const ModalSystem& ms, double x,
                                                                    double xd, double phi, double eps) {
    if (c.nu != 1) throw InputError("ssm_manifold_eval: only nu = 1 is supported");
    const Eigen::Index n = static_cast<Eigen::Index>(c.modes.size());
    Eigen::VectorXd eta(n), etad(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& m = c.modes[static_cast<std::size_t>(i)];
        eta[i] = m.w11() * x * x + 2.0 * m.w12() * x * xd + m.w22() * xd * xd +
                 eps * (m.wbar_sin * std::sin(phi) + m.wbar_cos * std::cos(phi));
        etad[i] = m.wt11() * x * x + 2.0 * m.wt12() * x * xd + m.wt22() * xd * xd +
                  eps * ms.Omega * (m.wbar_sin * std::cos(phi) - m.wbar_cos * std::sin(phi));
    }
    return {eta, etad};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ssm_manifold_eval(const SsmCoefficients& c, const ModalSystem& ms,
                                                              double x, double xd, double phi, double eps) {
    auto [eta, etad] = ssm_manifold_eval_modal(c, ms, x, xd, phi, eps);
    return {ms.Phi2 * eta, ms.Phi2 * etad};
}

double SsmModel::omega0() const { return std::sqrt(k / m); }
double SsmModel::zeta() const { return c / (2.0 * m * omega0()); }

SsmModel truncated_x_equation(const ModalSystem& ms) {
    SsmModel r;
    const double mass = ms.mass;
    r.m = mass;
    r.k = mass * ms.omega0 * ms.omega0;
    r.c = mass * 2.0 * ms.zeta * ms.omega0;
    r.x2 = mass * ms.R.pure(2, 0)[0];
    r.xxd = mass * ms.R.pure(1, 1)[0];
    r.xd2 = mass * ms.R.pure(0, 2)[0];
    r.cubic_direct = {mass * ms.R.pure(3, 0)[0], mass * ms.R.pure(2, 1)[0], mass * ms.R.pure(1, 2)[0],
                      mass * ms.R.pure(0, 3)[0]};
    r.F1 = mass * ms.Fhat1;
    r.Omega = ms.Omega;
    r.epsilon = ms.epsilon;
    r.provenance = "truncated";
    return r;
}

SsmModel ssm_reduce(const ModalSystem& ms, const SsmOptions& opts) {
    const SsmCoefficients co = ssm_coeffs_1dof(ms, opts);
    SsmModel r = truncated_x_equation(ms);
    r.provenance = "ssm";
    const Eigen::VectorXd a = ms.R.linear_in_y(1, 0).row(0).transpose();
    const Eigen::VectorXd b = ms.R.linear_in_y(0, 1).row(0).transpose();
    const Eigen::VectorXd c = ms.R.linear_in_ydot(1, 0).row(0).transpose();
    const Eigen::VectorXd d = ms.R.linear_in_ydot(0, 1).row(0).transpose();
    std::array<double, 4> cc{};
    for (std::size_t i = 0; i < co.modes.size(); ++i) {
        const auto& m = co.modes[i];
        const Eigen::Index k = static_cast<Eigen::Index>(i);
        cc[0] += a[k] * m.w11() + c[k] * m.wt11();
        cc[1] += 2.0 * a[k] * m.w12() + b[k] * m.w11() + 2.0 * c[k] * m.wt12() + d[k] * m.wt11();
        cc[2] += a[k] * m.w22() + 2.0 * b[k] * m.w12() + c[k] * m.wt22() + 2.0 * d[k] * m.wt12();
        cc[3] += b[k] * m.w22() + d[k] * m.wt22();
    }
    for (double& v : cc) v *= ms.mass;
    r.cubic_coupled = cc;
    r.coefficients = co;
    return r;
}

SsmModel linearized(const SsmModel& model) {
    SsmModel r;
    r.m = model.m;
    r.c = model.c;
    r.k = model.k;
    r.F1 = model.F1;
    r.Omega = model.Omega;
    r.epsilon = model.epsilon;
    r.provenance = "linear";
    return r;
}

LsmModel conservative_part(const SsmModel& model) {
    LsmModel m;
    m.omega0 = model.omega0();
    m.a2 = model.x2 / model.m;
    m.a3 = model.cubic(0) / model.m;
    m.b12 = model.cubic(2) / model.m;
    m.provenance = model.provenance;
    return m;
}

SsmModel from_lsm_shaped(const LsmModel& l, double mass, double zeta, double F1, double Omega, double epsilon) {
    SsmModel r;
    r.m = mass;
    r.k = mass * l.omega0 * l.omega0;
    r.c = mass * 2.0 * zeta * l.omega0;
    r.x2 = mass * l.a2;
    r.cubic_direct = {mass * l.a3, 0.0, mass * l.b12, 0.0};
    r.F1 = F1;
    r.Omega = Omega;
    r.epsilon = epsilon;
    r.provenance = l.provenance;
    return r;
}

nlohmann::json to_json(const SsmModel& r) {
    nlohmann::json j;
    j["linear"] = {{"m", r.m}, {"c", r.c}, {"k", r.k}};
    j["quad"] = {{"x2", r.x2}, {"xxd", r.xxd}, {"xd2", r.xd2}};
    j["cubic"] = {{"x3", r.cubic(0)}, {"x2xd", r.cubic(1)}, {"xxd2", r.cubic(2)}, {"xd3", r.cubic(3)}};
    j["cubic_direct"] = r.cubic_direct;
    j["cubic_coupled"] = r.cubic_coupled;
    j["forcing"] = {{"F1", r.F1}, {"Omega", r.Omega}, {"epsilon", r.epsilon}};
    j["provenance"] = r.provenance;
    nlohmann::json modes = nlohmann::json::array();
    if (r.coefficients) {
        for (const auto& m : r.coefficients->modes)
            modes.push_back({{"w11", m.w11()}, {"w12", m.w12()}, {"w22", m.w22()}, {"wbar_sin", m.wbar_sin},
                             {"wbar_cos", m.wbar_cos}, {"det_margin", m.det_margin}});
        j["warnings"] = r.coefficients->warnings;
    }
    j["per_mode"] = modes;
    return j;
}

SsmModel ssm_model_from_json(const nlohmann::json& j) {
    try {
        SsmModel r;
        r.m = j.at("linear").at("m").get<double>();
        r.c = j.at("linear").value("c", 0.0);
        r.k = j.at("linear").at("k").get<double>();
        if (j.contains("quad")) {
            r.x2 = j["quad"].value("x2", 0.0);
            r.xxd = j["quad"].value("xxd", 0.0);
            r.xd2 = j["quad"].value("xd2", 0.0);
        }
        if (j.contains("cubic")) {
            const auto& c = j["cubic"];
            r.cubic_direct = {c.value("x3", 0.0), c.value("x2xd", 0.0), c.value("xxd2", 0.0), c.value("xd3", 0.0)};
        }
        if (j.contains("forcing")) {
            r.F1 = j["forcing"].value("F1", 0.0);
            r.Omega = j["forcing"].value("Omega", 0.0);
            r.epsilon = j["forcing"].value("epsilon", 0.0);
        }
        r.provenance = j.value("provenance", std::string("ssm"));
        if (!(r.m > 0.0) || !(r.k > 0.0)) throw InputError("linear: m and k must be positive");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("SSM model JSON: ") + e.what());
    }
}

}  // namespace ssmreduce
