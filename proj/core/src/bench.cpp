#include "ssmreduce/bench.hpp"

#include "ssmreduce/error.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

namespace ssmreduce {

MechanicalSystem analytic_2dof(double c1, double mu1, double k1, double a, double b, double c2, double k2, double c) {
    MechanicalSystem s;
    s.m = 1.0;
    s.c = c1;
    s.k = k1;
    s.M = Eigen::MatrixXd::Identity(1, 1);
    s.C = Eigen::MatrixXd::Constant(1, 1, c2);
    s.K = Eigen::MatrixXd::Constant(1, 1, k2);
    s.P = NonlinearForm(1, 1);
    s.Q = NonlinearForm(1, 1);
    if (mu1 != 0.0) s.P.add(MonomialKey(2, 1, {0}, {0}), 0, mu1);
    if (a != 0.0) s.P.add(MonomialKey(1, 0, {1}, {0}), 0, a);
    if (b != 0.0) s.P.add(MonomialKey(3, 0, {0}, {0}), 0, b);
    if (c != 0.0) s.Q.add(MonomialKey(2, 0, {0}, {0}), 0, c);
    s.forcing.F2 = Eigen::VectorXd::Zero(1);
    s.basis = Eigen::MatrixXd::Identity(2, 2);
    s.provenance = "analytic2dof";
    validate(s);
    return s;
}

MechanicalSystem analytic_2dof(const AnalyticParams& p) {
    return analytic_2dof(p.c1, p.mu1, p.k1, p.a, p.b, p.c2, p.k2, p.c);
}

MechanicalSystem analytic_2dof_nearres(double r, AnalyticParams p) {
    p.c2 = r * p.c1;
    p.k2 = r * r * p.k1;
    MechanicalSystem s = analytic_2dof(p);
    s.provenance = "analytic2dof-nearres";
    return s;
}

void ChainSpec::validate() const {
    if (n_dof < 2) throw InputError("chain: n_dof must be at least 2");
    if (!(m > 0.0) || !(k > 0.0)) throw InputError("chain: m and k must be positive");
    if (!(c >= 0.0)) throw InputError("chain: c must be non-negative");
    if (!std::isfinite(kappa2) || !std::isfinite(kappa3)) throw InputError("chain: non-finite nonlinear stiffness");
}

FullSystem oscillator_chain(const ChainSpec& spec) {
    spec.validate();
    const std::size_t n = static_cast<std::size_t>(spec.n_dof);
    const Eigen::Index N = spec.n_dof;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        T(i, i) = 2.0;
        if (i + 1 < N) T(i, i + 1) = T(i + 1, i) = -1.0;
    }
    FullSystem f;
    f.M = spec.m * Eigen::MatrixXd::Identity(N, N);
    f.K = spec.k * T;
    f.C = spec.c * T;
    f.F = NonlinearForm(n, n);
    const StateLayout L{n};
    // Spring j joins q_{j-1} and q_j (q_0 = q_{n+1} = 0); elongation d = q_j - q_{j-1}.
    for (std::size_t j = 0; j <= n; ++j) {
        std::vector<std::pair<std::size_t, double>> d;
        if (j < n) d.emplace_back(L.y(j), 1.0);
        if (j > 0) d.emplace_back(L.y(j - 1), -1.0);
        for (const auto& [power, coef] : {std::pair{2, spec.kappa2}, std::pair{3, spec.kappa3}}) {
            if (coef == 0.0) continue;
            if (j < n) f.F.add_linear_power(j, coef, d, power);
            if (j > 0) f.F.add_linear_power(j - 1, -coef, d, power);
        }
    }
    Eigen::VectorXd phi(N);
    for (Eigen::Index i = 0; i < N; ++i) phi[i] = std::sin(static_cast<double>(i + 1) * std::numbers::pi / (N + 1));
    phi.normalize();
    f.mode_shape = phi;
    f.force = phi;
    f.epsilon = spec.epsilon;
    f.Omega = spec.Omega;
    f.provenance = "chain" + std::to_string(spec.n_dof);
    validate(f);
    return f;
}

double chain_potential(const ChainSpec& spec, const Eigen::VectorXd& q) {
    const Eigen::Index N = spec.n_dof;
    if (q.size() != N) throw InputError("chain_potential: dimension mismatch");
    double V = 0.0;
    for (Eigen::Index j = 0; j <= N; ++j) {
        const double d = (j < N ? q[j] : 0.0) - (j > 0 ? q[j - 1] : 0.0);
        V += 0.5 * spec.k * d * d + spec.kappa2 * d * d * d / 3.0 + 0.25 * spec.kappa3 * d * d * d * d;
    }
    return V;
}

double chain_frequency(const ChainSpec& spec, int j) {
    if (j < 1 || j > spec.n_dof) throw InputError("chain_frequency: mode index out of range");
    return 2.0 * std::sqrt(spec.k / spec.m) * std::sin(j * std::numbers::pi / (2.0 * (spec.n_dof + 1)));
}

PotentialFn chain_potential_partitioned(const ChainSpec& spec, const Eigen::MatrixXd& basis) {
    return [spec, basis](const Eigen::VectorXd& z) { return chain_potential(spec, basis * z); };
}

std::vector<std::string> preset_names() {
    return {"analytic2dof", "analytic2dof-nearres", "chain12-hardening", "chain12-softening", "chain12-damped"};
}

namespace {

Preset chain_preset(const std::string& name, const std::string& desc, ChainSpec spec) {
    Preset p;
    p.name = name;
    p.description = desc;
    p.chain = spec;
    p.full = oscillator_chain(spec);
    p.full.provenance = name;
    p.system = decouple_modeling_mode(p.full, p.full.mode_shape);
    p.system.provenance = name;
    p.potential = chain_potential_partitioned(spec, p.system.basis);
    return p;
}

}  // namespace

Preset make_preset(const std::string& name) {
    if (name == "analytic2dof" || name == "analytic2dof-nearres") {
        Preset p;
        p.name = name;
        p.system = name == "analytic2dof" ? analytic_2dof() : analytic_2dof_nearres();
        p.description = name == "analytic2dof" ? "two-mode example with quadratic coupling"
                                               : "two-mode example tuned near 1:2 resonance (r = 2.01)";
        p.full = to_full(p.system);
        p.full.provenance = name;
        return p;
    }
    ChainSpec s;
    s.Omega = chain_frequency(s, 1);
    s.epsilon = 0.0013;
    if (name == "chain12-hardening") {
        s.c = 0.01;
        s.kappa3 = 0.01;
        return chain_preset(name, "12-DOF chain, cubic springs (hardening)", s);
    }
    if (name == "chain12-softening") {
        s.c = 0.01;
        s.kappa2 = 0.01;
        return chain_preset(name, "12-DOF chain, quadratic springs (softening)", s);
    }
    if (name == "chain12-damped") {
        s.c = 0.05;
        s.kappa2 = 0.01;
        s.kappa3 = 0.01;
        s.epsilon = 0.0;
        return chain_preset(name, "12-DOF chain, quadratic and cubic springs, unforced", s);
    }
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw InputError("unknown preset '" + name + "' (known: " + known + ")");
}

MechanicalSystem import_external(const std::string& path) {
    MechanicalSystem s = load_system(path);
    s.provenance = "external:" + std::filesystem::path(path).filename().string();
    return s;
}

}  // namespace ssmreduce
