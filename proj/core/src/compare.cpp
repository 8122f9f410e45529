#include "ssmreduce/compare.hpp"

#include "ssmreduce/analysis.hpp"
#include "ssmreduce/error.hpp"
#include "ssmreduce/io.hpp"

#include <cmath>
#include <sstream>

namespace ssmreduce {

namespace {

struct ModalScalars {
    double w2, r20, r30;
    Eigen::VectorXd r1I, s20, lambda;
};

ModalScalars scalars(const ModalSystem& ms) {
    return {ms.omega0 * ms.omega0, ms.R.pure(2, 0)[0], ms.R.pure(3, 0)[0],
            ms.R.linear_in_y(1, 0).row(0).transpose(), ms.S.pure(2, 0), ms.omega.cwiseAbs2()};
}

// X = <r1I, (Omega^2 D4)^-1 D2 s20>, Y = <r1I, (Omega^2 D4)^-1 s20>
std::pair<double, double> lsm_inner_products(const ModalScalars& s) {
    double X = 0.0, Y = 0.0;
    for (Eigen::Index i = 0; i < s.lambda.size(); ++i) {
        const double l = s.lambda[i];
        const double d4 = l * (l - 4.0 * s.w2);
        if (std::abs(d4) < 1e-10 * l * (l + 4.0 * s.w2))
            throw PreconditionError("1:2 resonance singularity at non-modeling mode " + std::to_string(i + 1));
        X += s.r1I[i] * (l - 2.0 * s.w2) * s.s20[i] / d4;
        Y += s.r1I[i] * s.s20[i] / d4;
    }
    return {X, Y};
}

}  // namespace

MdModel md_reduce(const ModalSystem& ms) {
    const ModalScalars s = scalars(ms);
    const Eigen::Index n = s.lambda.size();
    MdModel md;
    md.Theta.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(s.lambda[i] > 0.0)) throw InputError("md_reduce: zero modal frequency");
        md.Theta[i] = -s.s20[i] / s.lambda[i];
    }
    md.model.omega0 = ms.omega0;
    md.model.a2 = s.r20;
    md.model.a3 = s.r30 + s.r1I.dot(md.Theta);
    md.model.b12 = 0.0;
    md.model.provenance = "md";
    md.manifold.frame = Frame::modal;
    md.manifold.w20 = md.Theta;
    md.manifold.w02 = Eigen::VectorXd::Zero(n);
    md.manifold.w30 = Eigen::VectorXd::Zero(n);
    md.manifold.w12 = Eigen::VectorXd::Zero(n);
    md.model.coefficients = md.manifold;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::ostringstream os;
        const double gap = s.lambda[i] - 4.0 * s.w2;
        if (std::abs(gap) < 1e-12 * s.lambda[i])
            os << "mode " << i + 1 << ": 1:2 resonance, MD error unbounded";
        else
            os << "mode " << i + 1 << ": LSM/MD x^2 coefficient ratio " << (s.lambda[i] - 2.0 * s.w2) / gap;
        md.warnings.push_back(os.str());
    }
    return md;
}

SsmModel md_damped_model(const ModalSystem& ms) {
    const MdModel md = md_reduce(ms);
    SsmModel r = truncated_x_equation(ms);
    r.provenance = "md";
    const Eigen::VectorXd& th = md.Theta;
    // y = Theta x^2 and ydot = 2 Theta x xdot
    const double a = ms.R.linear_in_y(1, 0).row(0).dot(th);
    const double b = ms.R.linear_in_y(0, 1).row(0).dot(th);
    const double c = ms.R.linear_in_ydot(1, 0).row(0).dot(th);
    const double d = ms.R.linear_in_ydot(0, 1).row(0).dot(th);
    r.cubic_coupled = {ms.mass * a, ms.mass * (b + 2.0 * c), ms.mass * 2.0 * d, 0.0};
    return r;
}

MdErrorRatios md_error_ratios(double omega, double omega_i) {
    const double w2 = omega * omega, l = omega_i * omega_i;
    if (std::abs(l - 4.0 * w2) < 1e-12 * l)
        throw PreconditionError("MD error unbounded: omega_i = 2 omega");
    MdErrorRatios r;
    r.alpha_over_theta = (l - 2.0 * w2) / (l - 4.0 * w2);
    r.gamma_over_alpha = std::abs(l - 2.0 * w2) < 1e-300 ? std::numeric_limits<double>::infinity()
                                                        : -2.0 / (l - 2.0 * w2);
    return r;
}

LsmModel nf_reduce(const ModalSystem& ms) {
    const ModalScalars s = scalars(ms);
    const auto [X, Y] = lsm_inner_products(s);
    LsmModel m;
    m.omega0 = ms.omega0;
    m.a2 = 0.0;
    m.a3 = s.r30 - X - 2.0 * s.r20 * s.r20 / (3.0 * s.w2);
    m.b12 = 2.0 * (Y - 2.0 * s.r20 * s.r20 / (3.0 * s.w2 * s.w2));
    m.provenance = "nf";
    m.coordinate = "u";
    return m;
}

Omega2Table omega2_table(const ModalSystem& ms) {
    const ModalScalars s = scalars(ms);
    const auto [X, Y] = lsm_inner_products(s);
    const double w = ms.omega0;
    double theta = 0.0;
    for (Eigen::Index i = 0; i < s.lambda.size(); ++i) theta += s.r1I[i] * s.s20[i] / s.lambda[i];
    Omega2Table t;
    t.lsm_nf = (9.0 * (s.r30 - X) * w * w - 10.0 * s.r20 * s.r20 + 6.0 * Y * std::pow(w, 4)) / (24.0 * std::pow(w, 3));
    t.md = (9.0 * (s.r30 - theta) * w * w - 10.0 * s.r20 * s.r20) / (24.0 * std::pow(w, 3));
    return t;
}

nlohmann::json comparison_report(const ModalSystem& ms) {
    const ModalSystem cons = conservative_limit(ms);
    nlohmann::json methods = nlohmann::json::array();
    auto add = [&](const LsmModel& m) {
        nlohmann::json j = to_json(m);
        j["omega2"] = backbone_coefficient(m);
        methods.push_back(j);
    };
    add(lsm_reduce_modal(cons));
    add(nf_reduce(cons));
    const MdModel md = md_reduce(cons);
    add(md.model);
    const Omega2Table t = omega2_table(cons);
    nlohmann::json ratios = nlohmann::json::array();
    for (std::size_t i = 0; i < ms.n(); ++i) {
        const double wi = ms.omega[static_cast<Eigen::Index>(i)];
        try {
            const MdErrorRatios r = md_error_ratios(ms.omega0, wi);
            ratios.push_back({{"mode", i + 1}, {"alpha_over_theta", r.alpha_over_theta},
                              {"gamma_over_alpha", r.gamma_over_alpha}});
        } catch (const PreconditionError&) {
            ratios.push_back({{"mode", i + 1}, {"alpha_over_theta", nullptr}, {"gamma_over_alpha", nullptr}});
        }
    }
    return {{"methods", methods},
            {"table", {{"lsm_nf", t.lsm_nf}, {"md", t.md}}},
            {"md_error_ratios", ratios},
            {"md_warnings", md.warnings},
            {"singularities", to_json(lsm_singularity_report(ms))}};
}

std::string comparison_csv(const ModalSystem& ms) {
    const ModalSystem cons = conservative_limit(ms);
    std::ostringstream os;
    os << "method,omega0,omega2,a2,a3,b12\n";
    for (const LsmModel& m : {lsm_reduce_modal(cons), nf_reduce(cons), md_reduce(cons).model})
        os << m.provenance << ',' << fmt17(m.omega0) << ',' << fmt17(backbone_coefficient(m)) << ','
           << fmt17(m.a2) << ',' << fmt17(m.a3) << ',' << fmt17(m.b12) << '\n';
    return os.str();
}

}  // namespace ssmreduce
