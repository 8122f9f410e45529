#include "helpers.hpp"
#include "random_systems.hpp"

#include "ssmreduce/bench.hpp"
#include "ssmreduce/error.hpp"
#include "ssmreduce/polynomial.hpp"
#include "ssmreduce/spectrum.hpp"
#include "ssmreduce/system.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

using namespace ssmreduce;

namespace {

std::vector<double> random_state(ssmtest::Rng& rng, std::size_t size, double scale) {
    std::vector<double> z(size);
    for (auto& v : z) v = ssmtest::uniform(rng, -scale, scale);
    return z;
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST(Polynomial, KeyDegreeAndVelocity) {
    const MonomialKey k(1, 2, {1, 0}, {0, 1});
    EXPECT_EQ(k.degree(), 5);
    EXPECT_FALSE(k.is_position_only());
    EXPECT_TRUE(MonomialKey(2, 0, {1}, {0}).is_position_only());
    EXPECT_EQ(MonomialKey::from_exponents({2, 0, 1, 0}), MonomialKey(2, 0, {1}, {0}));
}

TEST(Polynomial, LinearPowerMatchesDirectEvaluation) {
    NonlinearForm f(2, 1);
    f.add_linear_power(0, 0.7, {{2, 1.0}, {3, -1.0}}, 3);
    ssmtest::Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        const auto z = random_state(rng, 6, 1.0);
        EXPECT_NEAR(f.evaluate(z)[0], 0.7 * std::pow(z[2] - z[3], 3), 1e-14);
    }
}

TEST(Polynomial, JacobianMatchesFiniteDifferences) {
    ssmtest::Rng rng(12);
    const MechanicalSystem sys = ssmtest::random_system(rng, {2, 2, true, true, 0.1});
    const auto z = random_state(rng, StateLayout{2}.size(), 0.5);
    const Eigen::MatrixXd J = sys.Q.jacobian(z);
    for (std::size_t c = 0; c < z.size(); ++c) {
        auto zp = z, zm = z;
        zp[c] += 1e-6;
        zm[c] -= 1e-6;
        const Eigen::VectorXd fd = (sys.Q.evaluate(zp) - sys.Q.evaluate(zm)) / 2e-6;
        EXPECT_LT((fd - J.col(static_cast<Eigen::Index>(c))).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Polynomial, CompiledFormMatchesEvaluate) {
    ssmtest::Rng rng(13);
    const MechanicalSystem sys = ssmtest::random_system(rng, {3, 3, true, true, 0.1});
    const CompiledForm cq(sys.Q);
    for (int i = 0; i < 10; ++i) {
        const auto z = random_state(rng, StateLayout{3}.size(), 1.0);
        std::vector<double> out(3, 0.0);
        cq.accumulate(z.data(), out.data());
        const Eigen::VectorXd ref = sys.Q.evaluate(z);
        for (int r = 0; r < 3; ++r) EXPECT_NEAR(out[static_cast<std::size_t>(r)], ref[r], 1e-13);
    }
}

TEST(Polynomial, SubstituteIdentityIsNoOp) {
    ssmtest::Rng rng(14);
    const MechanicalSystem sys = ssmtest::random_system(rng, {2, 2, true, true, 0.1});
    const auto I = Eigen::MatrixXd::Identity(6, 6);
    EXPECT_EQ(sys.Q.substitute(I, 2), sys.Q);
}

TEST(Polynomial, SubstituteMatchesComposedEvaluation) {
    ssmtest::Rng rng(15);
    const MechanicalSystem sys = ssmtest::random_system(rng, {3, 3, true, true, 0.1});
    Eigen::MatrixXd dense(8, 10);
    for (Eigen::Index i = 0; i < dense.size(); ++i) dense.data()[i] = ssmtest::uniform(rng, -1.0, 1.0);
    Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(8, 10);
    for (Eigen::Index i = 0; i < 8; ++i) perm(i, (3 * i + 1) % 10) = 1.5;
    for (const Eigen::MatrixXd& map : {dense, perm}) {
        const NonlinearForm g = sys.Q.substitute(map, 4);
        for (int t = 0; t < 10; ++t) {
            const auto z = random_state(rng, 10, 0.8);
            const Eigen::VectorXd old = map * Eigen::Map<const Eigen::VectorXd>(z.data(), 10);
            const Eigen::VectorXd ref = sys.Q.evaluate(std::span<const double>(old.data(), 8));
            EXPECT_LT((g.evaluate(z) - ref).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + ref.cwiseAbs().maxCoeff()));
        }
    }
}

TEST(System, MinimalJsonLoads) {
    const std::string dir = ssmtest::scratch_dir("minimal_json");
    const std::string p = dir + "/sys.json";
    write_file(p, R"({"modal": {"m": 1, "k": 1}, "nonmodal": {"M": [[1]], "K": [[9]]},
                      "Q": [{"j": 2, "coeff": [1]}]})");
    const MechanicalSystem sys = load_system(p);
    EXPECT_EQ(sys.n(), 1u);
    EXPECT_DOUBLE_EQ(sys.Q.coeff(sys.Q.key(2, 0), 0), 1.0);
    EXPECT_TRUE(sys.is_conservative());
}

TEST(System, DegreeFourRejected) {
    const std::string dir = ssmtest::scratch_dir("degree_json");
    const std::string p = dir + "/sys.json";
    write_file(p, R"({"modal": {"m": 1, "k": 1}, "nonmodal": {"M": [[1]], "K": [[9]]},
                      "Q": [{"j": 4, "coeff": [1]}]})");
    try {
        load_system(p);
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("degree out of range"), std::string::npos);
    }
}

TEST(System, MalformedInputsRejected) {
    const std::string dir = ssmtest::scratch_dir("bad_json");
    const std::string p = dir + "/sys.json";
    write_file(p, R"({"modal": {"m": 1, "k": 1}, "nonmodal": {"M": [[1, 0.5], [0, 1]], "K": [[9, 0], [0, 9]]}})");
    EXPECT_THROW(load_system(p), InputError);
    write_file(p, "{not json");
    EXPECT_THROW(load_system(p), InputError);
    EXPECT_THROW(load_system(dir + "/missing.json"), InputError);
}

TEST(System, JsonRoundTrip) {
    const MechanicalSystem a = analytic_2dof();
    const MechanicalSystem b = system_from_json(to_json(a));
    EXPECT_EQ(a.P, b.P);
    EXPECT_EQ(a.Q, b.Q);
    EXPECT_DOUBLE_EQ(a.c, b.c);
    EXPECT_TRUE(a.K.isApprox(b.K));
}

TEST(System, AnalyticExampleParameters) {
    const MechanicalSystem s = analytic_2dof();
    EXPECT_DOUBLE_EQ(s.c, 0.1);
    EXPECT_DOUBLE_EQ(s.k, 1.0);
    EXPECT_DOUBLE_EQ(s.C(0, 0), 1.2);
    EXPECT_DOUBLE_EQ(s.K(0, 0), 27.0);
    EXPECT_DOUBLE_EQ(s.P.coeff(MonomialKey(2, 1, {0}, {0}), 0), 0.02);
    EXPECT_DOUBLE_EQ(s.P.coeff(s.P.key_y(1, 0, 0), 0), 0.06);
    EXPECT_DOUBLE_EQ(s.P.coeff(s.P.key(3, 0), 0), 0.02);
    EXPECT_DOUBLE_EQ(s.Q.coeff(s.Q.key(2, 0), 0), 0.08);
}

TEST(System, DecouplingRemovesLinearCoupling) {
    ssmtest::Rng rng(21);
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(3, 3);
    const Eigen::MatrixXd M = A * A.transpose() + 3.0 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd B = Eigen::MatrixXd::Random(3, 3);
    const Eigen::MatrixXd K = B * B.transpose() + 2.0 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
    FullSystem full;
    full.M = M;
    full.K = K;
    full.C = Eigen::MatrixXd::Zero(3, 3);
    full.F = NonlinearForm(3, 3);
    full.force = Eigen::VectorXd::Zero(3);
    const MechanicalSystem sys = decouple_modeling_mode(full, es.eigenvectors().col(1));
    const Eigen::MatrixXd T = sys.basis;
    const Eigen::MatrixXd Mt = T.transpose() * M * T, Kt = T.transpose() * K * T;
    EXPECT_LT(Mt.row(0).tail(2).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(Kt.row(0).tail(2).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(sys.k / sys.m, es.eigenvalues()[1], 1e-10);
}

TEST(System, DecouplingPreservesSpectrum) {
    const Preset p = make_preset("chain12-damped");
    std::vector<Complex> full = quadratic_eigenvalues(p.full.M, p.full.C, p.full.K);
    const FullSystem back = to_full(p.system);
    std::vector<Complex> part = quadratic_eigenvalues(back.M, back.C, back.K);
    sort_spectrum(full);
    sort_spectrum(part);
    ASSERT_EQ(full.size(), part.size());
    for (std::size_t i = 0; i < full.size(); ++i) EXPECT_LT(std::abs(full[i] - part[i]), 1e-10);
}

TEST(System, ChainDecouplingIsDiagonalInX) {
    const Preset p = make_preset("chain12-hardening");
    const Eigen::MatrixXd& T = p.system.basis;
    const Eigen::MatrixXd Kt = T.transpose() * p.full.K * T;
    EXPECT_LT(Kt.row(0).tail(11).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(System, AlreadyPartitionedIsUnchanged) {
    const MechanicalSystem s = analytic_2dof();
    const MechanicalSystem t = decouple_modeling_mode(to_full(s), Eigen::VectorXd::Unit(2, 0));
    EXPECT_DOUBLE_EQ(t.k, s.k);
    EXPECT_TRUE(t.K.isApprox(s.K));
    EXPECT_EQ(t.Q, s.Q);
    EXPECT_EQ(t.P, s.P);
}

TEST(System, ModalTransformOfDiagonalSystemIsIdentity) {
    const ModalSystem ms = modal_transform(analytic_2dof());
    EXPECT_NEAR(std::abs(ms.Phi2(0, 0)), 1.0, 1e-14);
    EXPECT_NEAR(ms.omega[0], std::sqrt(27.0), 1e-14);
    EXPECT_NEAR(ms.zeta_vec[0], 1.2 / (2.0 * std::sqrt(27.0)), 1e-14);
    EXPECT_NEAR(ms.zeta, 0.05, 1e-15);
}

TEST(System, ChainModalMatrixIsSine) {
    const Preset p = make_preset("chain12-hardening");
    const ModalSystem ms = modal_transform(p.system);
    const Eigen::MatrixXd modes = p.system.basis.rightCols(11) * ms.Phi2;  // physical shapes of modes 2..12
    for (Eigen::Index c = 0; c < 11; ++c) {
        const int j = static_cast<int>(c) + 2;
        Eigen::VectorXd s(12);
        for (int i = 0; i < 12; ++i) s[i] = std::sin((i + 1) * j * std::numbers::pi / 13.0);
        const double cosang = std::abs(s.dot(modes.col(c))) / (s.norm() * modes.col(c).norm());
        EXPECT_NEAR(cosang, 1.0, 1e-10) << "mode " << j;
    }
}

TEST(System, RayleighDampingDiagonalizes) {
    ssmtest::Rng rng(31);
    const MechanicalSystem sys = ssmtest::random_system(rng, {3, 3, true, false, 0.1});
    const ModalSystem ms = modal_transform(sys);
    const Eigen::MatrixXd D = ms.Phi2.transpose() * sys.C * ms.Phi2;
    EXPECT_LT((D - Eigen::MatrixXd(D.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(System, ModalRoundTripReproducesRhs) {
    ssmtest::Rng rng(32);
    for (int trial = 0; trial < 5; ++trial) {
        const MechanicalSystem sys = ssmtest::random_system(rng, {1, 4, true, true, 0.1});
        const ModalSystem ms = modal_transform(sys);
        const std::size_t n = sys.n();
        const auto zm = random_state(rng, StateLayout{n}.size(), 0.5);
        // Physical state y = Phi2 eta.
        const Eigen::Map<const Eigen::VectorXd> eta(zm.data() + 2, static_cast<Eigen::Index>(n));
        const Eigen::Map<const Eigen::VectorXd> etad(zm.data() + 2 + n, static_cast<Eigen::Index>(n));
        std::vector<double> zp(zm.size());
        zp[0] = zm[0];
        zp[1] = zm[1];
        Eigen::Map<Eigen::VectorXd>(zp.data() + 2, static_cast<Eigen::Index>(n)) = ms.Phi2 * eta;
        Eigen::Map<Eigen::VectorXd>(zp.data() + 2 + n, static_cast<Eigen::Index>(n)) = ms.Phi2 * etad;
        const Eigen::VectorXd Sm = ms.S.evaluate(zm);
        const Eigen::VectorXd Qp = ms.Phi2.transpose() * sys.Q.evaluate(zp);
        EXPECT_LT((Sm - Qp).norm(), 1e-10 * std::max(1.0, Qp.norm()));
        EXPECT_NEAR(ms.R.evaluate(zm)[0], sys.P.evaluate(zp)[0] / sys.m, 1e-10 * std::max(1.0, std::abs(ms.R.evaluate(zm)[0])));
    }
}

TEST(System, ScaleDissipationReachesConservativeLimit) {
    const MechanicalSystem s = analytic_2dof();
    EXPECT_FALSE(s.is_conservative());
    EXPECT_TRUE(conservative_limit(s).is_conservative());
    const MechanicalSystem h = scale_dissipation(s, 0.5);
    EXPECT_DOUBLE_EQ(h.c, 0.05);
    EXPECT_DOUBLE_EQ(h.P.coeff(MonomialKey(2, 1, {0}, {0}), 0), 0.01);
}

TEST(Spectrum, ScalarQuadraticFormula) {
    const auto l = quadratic_eigenvalues(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Constant(1, 1, 0.1),
                                         Eigen::MatrixXd::Ones(1, 1));
    ASSERT_EQ(l.size(), 2u);
    EXPECT_NEAR(l[0].real(), -0.05, 1e-14);
    EXPECT_NEAR(std::abs(l[0].imag()), std::sqrt(1.0 - 0.0025), 1e-14);
}

TEST(Spectrum, AnalyticExample) {
    const Spectrum s = compute_spectrum(analytic_2dof());
    EXPECT_NEAR(s.lambda_y.front().real(), -0.6, 1e-13);
    EXPECT_NEAR(std::abs(s.lambda_y.front().imag()), std::sqrt(27.0 - 0.36), 1e-12);
    ASSERT_TRUE(s.sigma.has_value());
    EXPECT_EQ(*s.sigma, 12);
}

TEST(Spectrum, ConservativeChainHasNoSigma) {
    ChainSpec c;
    c.kappa3 = 0.01;
    const MechanicalSystem sys = decouple_modeling_mode(oscillator_chain(c), oscillator_chain(c).mode_shape);
    const Spectrum s = compute_spectrum(sys);
    EXPECT_TRUE(s.conservative);
    EXPECT_FALSE(s.sigma.has_value());
    for (const auto& l : s.lambda_y) EXPECT_NEAR(l.real(), 0.0, 1e-12);
    EXPECT_NE(std::find(s.diagnostics.begin(), s.diagnostics.end(), "conservative: sigma not applicable"),
              s.diagnostics.end());
}

TEST(Spectrum, SortOrder) {
    std::vector<Complex> l{{-1.0, 2.0}, {-0.1, -1.0}, {-0.1, 1.0}, {-0.1, 3.0}};
    sort_spectrum(l);
    EXPECT_EQ(l[0], Complex(-0.1, 1.0));
    EXPECT_EQ(l[1], Complex(-0.1, -1.0));
    EXPECT_EQ(l[2], Complex(-0.1, 3.0));
    EXPECT_EQ(l[3], Complex(-1.0, 2.0));
}

TEST(Spectrum, LsmNonresonanceChecks) {
    auto spec = [](double wy) {
        return spectrum_from_modal(1.0, 0.0, Eigen::VectorXd::Constant(1, wy), Eigen::VectorXd::Zero(1));
    };
    EXPECT_TRUE(check_lsm_nonresonance(spec(3.3)).passed());
    const ResonanceReport near = check_lsm_nonresonance(spec(2.01), 0.05);
    ASSERT_EQ(near.flags.size(), 1u);
    EXPECT_EQ(near.flags[0].mode, 1u);
    EXPECT_NEAR(near.flags[0].margin, 0.01, 1e-12);
    EXPECT_FALSE(near.flags[0].hard);
    const ResonanceReport exact = check_lsm_nonresonance(spec(2.0));
    ASSERT_EQ(exact.flags.size(), 1u);
    EXPECT_TRUE(exact.flags[0].hard);
    EXPECT_EQ(exact.flags[0].margin, 0.0);
}

TEST(Spectrum, SsmNonresonanceBorderlineAnalyticCase) {
    // Re lambda_y = -0.6 = 12 Re lambda_x exactly.
    const ResonanceReport r = check_ssm_nonresonance(compute_spectrum(analytic_2dof()));
    ASSERT_FALSE(r.passed());
    bool order12 = false;
    for (const auto& f : r.flags) order12 = order12 || (f.kind == "order 12" && f.margin < 1e-12);
    EXPECT_TRUE(order12);
}

TEST(Spectrum, SsmNonresonanceConstructedViolation) {
    // zeta omega = 0.1 for x and 0.2 for y with sigma = 2.
    const Spectrum s = spectrum_from_modal(1.0, 0.1, Eigen::VectorXd::Constant(1, 2.0),
                                           Eigen::VectorXd::Constant(1, 0.1));
    ASSERT_TRUE(s.sigma.has_value());
    EXPECT_EQ(*s.sigma, 2);
    const ResonanceReport r = check_ssm_nonresonance(s);
    ASSERT_FALSE(r.passed());
    EXPECT_NEAR(r.flags[0].margin, 0.0, 1e-12);
}

TEST(Spectrum, SsmNonresonanceIncommensurateRatesPass) {
    const Spectrum s = spectrum_from_modal(1.0, 0.02, Eigen::VectorXd::Constant(1, std::sqrt(13.0)),
                                           Eigen::VectorXd::Constant(1, 0.02 * std::numbers::pi / std::sqrt(13.0) * 1.1));
    EXPECT_TRUE(check_ssm_nonresonance(s).passed());
}

TEST(Spectrum, IntegerPartSnaps) {
    EXPECT_EQ(integer_part(0.6 / 0.05), 12);
    EXPECT_EQ(integer_part(11.999), 11);
    EXPECT_EQ(integer_part(3.5), 3);
}
