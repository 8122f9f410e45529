#include "ssmreduce/lsm.hpp"

#include "ssmreduce/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace ssmreduce {

namespace {

constexpr double kSingularTol = 1e-10;

void require_conservative(const MechanicalSystem& sys) {
    if (!sys.is_conservative())
        throw PreconditionError("LSM reduction requires a conservative system (c = 0, C = 0, eps = 0, "
                                "no velocity-dependent terms)");
}

std::vector<double> frequency_ratios(const Eigen::MatrixXd& A, double omega) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    std::vector<double> r;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        r.push_back(std::sqrt(std::max(es.eigenvalues()[i].real(), 0.0)) / omega);
    std::sort(r.begin(), r.end());
    return r;
}

Eigen::VectorXd solve_block(const Eigen::MatrixXd& B, const Eigen::VectorXd& rhs, const Eigen::MatrixXd& A,
                            double omega, const char* what) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
    const auto& sv = svd.singularValues();
    if (sv.minCoeff() < kSingularTol * sv.maxCoeff()) {
        std::vector<double> ratios = frequency_ratios(A, omega);
        std::ostringstream os;
        os << "LSM resonance singularity in the " << what << " block system; omega_i/omega =";
        for (double r : ratios) os << ' ' << r;
        throw LsmResonanceError(os.str(), ratios);
    }
    return B.fullPivLu().solve(rhs);
}

struct GeneralData {
    double w2;
    double p20, p30;
    Eigen::VectorXd p1I;
    Eigen::MatrixXd A, Minv;
    Eigen::VectorXd q20, q30;
    Eigen::MatrixXd Q1I;
};

GeneralData general_data(const MechanicalSystem& sys) {
    require_conservative(sys);
    validate(sys);
    GeneralData d;
    d.w2 = sys.k / sys.m;
    d.p20 = sys.P.pure(2, 0)[0] / sys.m;
    d.p30 = sys.P.pure(3, 0)[0] / sys.m;
    d.p1I = sys.P.linear_in_y(1, 0).row(0).transpose() / sys.m;
    d.Minv = sys.M.llt().solve(Eigen::MatrixXd::Identity(sys.M.rows(), sys.M.cols()));
    d.A = d.Minv * sys.K;
    d.q20 = sys.Q.pure(2, 0);
    d.q30 = sys.Q.pure(3, 0);
    d.Q1I = sys.Q.linear_in_y(1, 0);
    return d;
}

}  // namespace

LsmCoefficients lsm_coeffs_general(const MechanicalSystem& sys) {
    const GeneralData d = general_data(sys);
    const Eigen::Index n = d.A.rows();
    const double w2 = d.w2;
    const double w = std::sqrt(w2);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

    Eigen::MatrixXd B2(2 * n, 2 * n);
    B2 << d.A - 2.0 * w2 * I, 2.0 * w2 * w2 * I, 2.0 * I, d.A - 2.0 * w2 * I;
    Eigen::VectorXd r2 = Eigen::VectorXd::Zero(2 * n);
    r2.head(n) = -d.Minv * d.q20;
    const Eigen::VectorXd s2 = solve_block(B2, r2, d.A, w, "second-order");

    LsmCoefficients c;
    c.frame = Frame::general;
    c.w20 = s2.head(n);
    c.w02 = s2.tail(n);

    const Eigen::MatrixXd MQ = d.Minv * d.Q1I;
    Eigen::MatrixXd B3(2 * n, 2 * n);
    B3 << d.A - 3.0 * w2 * I, 2.0 * w2 * w2 * I, 6.0 * I, d.A - 7.0 * w2 * I;
    Eigen::VectorXd r3(2 * n);
    r3.head(n) = -d.Minv * d.q30 + 2.0 * d.p20 * c.w20 - MQ * c.w20 - 4.0 * w2 * d.p20 * c.w02;
    r3.tail(n) = 4.0 * d.p20 * c.w02 - MQ * c.w02;
    const Eigen::VectorXd s3 = solve_block(B3, r3, d.A, w, "third-order");
    c.w30 = s3.head(n);
    c.w12 = s3.tail(n);
    return c;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> lsm_quadratic_closed_form(const MechanicalSystem& sys) {
    const GeneralData d = general_data(sys);
    const Eigen::Index n = d.A.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd v = d.A.partialPivLu().solve(d.Minv * d.q20);
    const Eigen::VectorXd u = (d.A - 4.0 * d.w2 * I).partialPivLu().solve(v);
    return {-(d.A - 2.0 * d.w2 * I) * u, 2.0 * u};
}

LsmModel lsm_reduce_general(const MechanicalSystem& sys) {
    const GeneralData d = general_data(sys);
    const LsmCoefficients c = lsm_coeffs_general(sys);
    LsmModel m;
    m.omega0 = std::sqrt(d.w2);
    m.a2 = d.p20;
    m.a3 = d.p30 + d.p1I.dot(c.w20);
    m.b12 = d.p1I.dot(c.w02);
    m.provenance = "lsm-general";
    m.coefficients = c;
    return m;
}

LsmCoefficients lsm_coeffs_modal(const ModalSystem& msys) {
    if (!msys.is_conservative()) throw PreconditionError("modal LSM reduction requires a conservative system");
    const Eigen::Index n = static_cast<Eigen::Index>(msys.n());
    const double w2 = msys.omega0 * msys.omega0;
    const double r20 = msys.R.pure(2, 0)[0];
    const Eigen::VectorXd s20 = msys.S.pure(2, 0);
    const Eigen::VectorXd s30 = msys.S.pure(3, 0);
    const Eigen::MatrixXd S1I = msys.S.linear_in_y(1, 0);

    LsmCoefficients c;
    c.frame = Frame::modal;
    c.w20.resize(n);
    c.w02.resize(n);
    c.w30.resize(n);
    c.w12.resize(n);
    auto fail = [&](Eigen::Index i, const char* type) {
        std::vector<double> ratios;
        for (Eigen::Index k = 0; k < n; ++k) ratios.push_back(msys.omega[k] / msys.omega0);
        throw LsmResonanceError("modal LSM resonance: mode " + std::to_string(i + 1) + " is in " + type +
                                    " resonance (omega_i/omega = " + std::to_string(ratios[static_cast<std::size_t>(i)]) + ")",
                                ratios);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = msys.omega[i] * msys.omega[i];
        const double d4 = l * (l - 4.0 * w2);
        if (std::abs(d4) < kSingularTol * l * (l + 4.0 * w2)) fail(i, "1:2");
        c.w20[i] = -(l - 2.0 * w2) * s20[i] / d4;
        c.w02[i] = 2.0 * s20[i] / d4;
    }
    const Eigen::VectorXd n1 = -s30 + 2.0 * r20 * c.w20 - S1I * c.w20 - 4.0 * w2 * r20 * c.w02;
    const Eigen::VectorXd n2 = 4.0 * r20 * c.w02 - S1I * c.w02;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = msys.omega[i] * msys.omega[i];
        const double d19 = (l - w2) * (l - 9.0 * w2);
        if (std::abs(d19) < kSingularTol * (l + w2) * (l + 9.0 * w2))
            fail(i, std::abs(l - w2) < std::abs(l - 9.0 * w2) ? "1:1" : "1:3");
        c.w30[i] = ((l - 7.0 * w2) * n1[i] - 2.0 * w2 * w2 * n2[i]) / d19;
        c.w12[i] = (-6.0 * n1[i] + (l - 3.0 * w2) * n2[i]) / d19;
    }
    return c;
}

LsmModel lsm_reduce_modal(const ModalSystem& msys) {
    const LsmCoefficients c = lsm_coeffs_modal(msys);
    const Eigen::VectorXd r1I = msys.R.linear_in_y(1, 0).row(0).transpose();
    LsmModel m;
    m.omega0 = msys.omega0;
    m.a2 = msys.R.pure(2, 0)[0];
    m.a3 = msys.R.pure(3, 0)[0] + r1I.dot(c.w20);
    m.b12 = r1I.dot(c.w02);
    m.provenance = "lsm-modal";
    m.coefficients = c;
    return m;
}

DuffingCheck is_duffing(const LsmModel& model, double tol) {
    DuffingCheck d;
    d.is_duffing = std::abs(model.a2) < tol && std::abs(model.b12) < tol;
    d.omega0 = model.omega0;
    d.beta = model.a3;
    return d;
}

double hamiltonian(const LsmModel& model, double x, double y) {
    const double al = model.a2, be = model.a3, ga = model.b12, w2 = model.omega0 * model.omega0;
    if (ga == 0.0) return 0.5 * y * y + 0.5 * w2 * x * x + al * x * x * x / 3.0 + be * x * x * x * x / 4.0;
    const double e = std::exp(ga * x * x);
    double integral = 0.0;
    if (x != 0.0) {
        auto f = [&](double s) { return std::exp(ga * s * s) * (al * s * s + be * s * s * s); };
        integral = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, 0.0, x, 15, 1e-14);
    }
    return 0.5 * e * y * y + w2 * std::expm1(ga * x * x) / (2.0 * ga) + integral;
}

std::vector<SingularityEntry> lsm_singularity_report(const ModalSystem& msys, double tol) {
    std::vector<SingularityEntry> out;
    const double w = msys.omega0;
    for (std::size_t i = 0; i < msys.n(); ++i) {
        const double wi = msys.omega[static_cast<Eigen::Index>(i)];
        SingularityEntry e;
        e.mode = i + 1;
        e.ratio = wi / w;
        e.factor_d4 = wi * wi * (wi - 2.0 * w) * (wi + 2.0 * w);
        e.factor_d1d9 = (wi - w) * (wi + w) * (wi - 3.0 * w) * (wi + 3.0 * w);
        e.margin = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 3; ++k) {
            const double m = std::abs(e.ratio - k);
            if (m < e.margin) {
                e.margin = m;
                e.type = "1:" + std::to_string(k);
            }
        }
        e.flagged = e.margin < tol;
        out.push_back(e);
    }
    return out;
}

namespace {
nlohmann::json vec(const Eigen::VectorXd& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}
Eigen::VectorXd unvec(const nlohmann::json& j) {
    std::vector<double> v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
}  // namespace

nlohmann::json to_json(const LsmModel& m) {
    nlohmann::json j = {{"omega0", m.omega0}, {"a2", m.a2},       {"a3", m.a3},
                        {"b12", m.b12},       {"provenance", m.provenance}, {"coordinate", m.coordinate}};
    if (m.coefficients) {
        const auto& c = *m.coefficients;
        j["coefficients"] = {{"w20", vec(c.w20)}, {"w02", vec(c.w02)}, {"w30", vec(c.w30)}, {"w12", vec(c.w12)},
                             {"frame", c.frame == Frame::general ? "general" : "modal"}};
    }
    return j;
}

nlohmann::json to_json(const std::vector<SingularityEntry>& report) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& e : report)
        a.push_back({{"mode", e.mode}, {"type", e.type}, {"ratio", e.ratio}, {"margin", e.margin},
                     {"factor_d4", e.factor_d4}, {"factor_d1d9", e.factor_d1d9}, {"flagged", e.flagged}});
    return a;
}

LsmModel lsm_model_from_json(const nlohmann::json& j) {
    try {
        LsmModel m;
        m.omega0 = j.at("omega0").get<double>();
        m.a2 = j.value("a2", 0.0);
        m.a3 = j.value("a3", 0.0);
        m.b12 = j.value("b12", 0.0);
        m.provenance = j.value("provenance", std::string());
        m.coordinate = j.value("coordinate", std::string("x"));
        if (j.contains("coefficients")) {
            const auto& c = j.at("coefficients");
            LsmCoefficients co;
            co.w20 = unvec(c.at("w20"));
            co.w02 = unvec(c.at("w02"));
            co.w30 = unvec(c.at("w30"));
            co.w12 = unvec(c.at("w12"));
            co.frame = c.value("frame", std::string("general")) == "modal" ? Frame::modal : Frame::general;
            m.coefficients = co;
        }
        if (!(m.omega0 > 0.0)) throw InputError("omega0: must be positive");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("LSM model JSON: ") + e.what());
    }
}

}  // namespace ssmreduce
