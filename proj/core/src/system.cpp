#include "ssmreduce/system.hpp"

#include "ssmreduce/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ssmreduce {

using nlohmann::json;

namespace {

bool is_symmetric(const Eigen::MatrixXd& A) {
    const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
    return (A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

bool is_positive_definite(const Eigen::MatrixXd& A) {
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    return llt.info() == Eigen::Success;
}

bool is_positive_semidefinite(const Eigen::MatrixXd& A) {
    if (A.size() == 0 || A.isZero(0.0)) return true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -1e-12 * A.norm();
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) throw InputError(field + ": expected a number");
    return j.get<double>();
}

double optional_number(const json& obj, const char* key, const std::string& path, double dflt) {
    if (!obj.contains(key)) return dflt;
    return number(obj.at(key), path + "." + key);
}

Eigen::VectorXd vector_field(const json& j, const std::string& field, std::size_t expect) {
    if (j.is_number() && expect == 1) return Eigen::VectorXd::Constant(1, j.get<double>());
    if (!j.is_array()) throw InputError(field + ": expected an array");
    if (j.size() != expect)
        throw InputError(field + ": expected " + std::to_string(expect) + " values, got " +
                         std::to_string(j.size()));
    Eigen::VectorXd v(static_cast<Eigen::Index>(expect));
    for (std::size_t i = 0; i < expect; ++i)
        v[static_cast<Eigen::Index>(i)] = number(j[i], field + "[" + std::to_string(i) + "]");
    return v;
}

Eigen::MatrixXd matrix_field(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw InputError(field + ": expected a non-empty 2-D array");
    const std::size_t rows = j.size();
    if (!j[0].is_array()) throw InputError(field + ": expected a 2-D array");
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw InputError(field + ": ragged row " + std::to_string(r));
        for (std::size_t c = 0; c < cols; ++c)
            A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                number(j[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return A;
}

std::vector<int> exponent_list(const json& entry, const char* key, std::size_t n,
                               const std::string& path) {
    if (!entry.contains(key)) return std::vector<int>(n, 0);
    const json& a = entry.at(key);
    if (!a.is_array() || a.size() != n)
        throw InputError(path + "." + key + ": expected " + std::to_string(n) + " exponents");
    std::vector<int> out;
    for (const auto& e : a) {
        if (!e.is_number_integer() || e.get<int>() < 0)
            throw InputError(path + "." + key + ": exponents must be non-negative integers");
        out.push_back(e.get<int>());
    }
    return out;
}

NonlinearForm parse_form(const json& arr, const std::string& name, std::size_t n,
                         std::size_t rows) {
    NonlinearForm form(n, rows);
    if (!arr.is_array()) throw InputError(name + ": expected an array of terms");
    for (std::size_t t = 0; t < arr.size(); ++t) {
        const std::string path = name + "[" + std::to_string(t) + "]";
        const json& e = arr[t];
        if (!e.is_object()) throw InputError(path + ": expected an object");
        auto exp = [&](const char* key) {
            if (!e.contains(key)) return 0;
            if (!e.at(key).is_number_integer() || e.at(key).get<int>() < 0)
                throw InputError(path + "." + key + ": expected a non-negative integer");
            return e.at(key).get<int>();
        };
        MonomialKey key(exp("j"), exp("k"), exponent_list(e, "u", n, path),
                        exponent_list(e, "v", n, path));
        if (key.degree() < 2 || key.degree() > 3)
            throw InputError(path + ": degree out of range (" + std::to_string(key.degree()) +
                             "); allowed degrees are 2 and 3");
        if (!e.contains("coeff")) throw InputError(path + ".coeff: missing");
        form.add(key, vector_field(e.at("coeff"), path + ".coeff", rows));
    }
    return form;
}

void check_degrees(const NonlinearForm& f, const std::string& name) {
    for (const auto& [key, c] : f.terms())
        if (key.degree() < 2 || key.degree() > 3)
            throw InputError(name + ": degree out of range (" + std::to_string(key.degree()) + ")");
}

json matrix_json(const Eigen::MatrixXd& A) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back(A(r, c));
        rows.push_back(row);
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json form_json(const NonlinearForm& f, bool scalar) {
    json arr = json::array();
    for (const auto& [key, c] : f.terms()) {
        json e = {{"j", key.j()}, {"k", key.k()}, {"u", key.u()}, {"v", key.v()}};
        e["coeff"] = scalar ? json(c[0]) : vector_json(c);
        arr.push_back(e);
    }
    return arr;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": JSON parse error: " + e.what());
    }
}

}  // namespace

bool MechanicalSystem::is_conservative() const {
    return c == 0.0 && C.isZero(0.0) && forcing.epsilon == 0.0 && P.is_position_only() &&
           Q.is_position_only();
}

bool ModalSystem::is_conservative() const {
    return zeta == 0.0 && zeta_vec.isZero(0.0) && epsilon == 0.0 && R.is_position_only() &&
           S.is_position_only();
}

void validate(const MechanicalSystem& sys) {
    const std::size_t n = sys.n();
    if (n == 0) throw InputError("nonmodal: at least one non-modeling coordinate is required");
    if (!(sys.m > 0.0)) throw InputError("modal.m: must be positive");
    if (!(sys.k > 0.0)) throw InputError("modal.k: must be positive");
    if (!(sys.c >= 0.0)) throw InputError("modal.c: must be non-negative");
    auto square = [n](const Eigen::MatrixXd& A, const char* name) {
        if (static_cast<std::size_t>(A.rows()) != n || static_cast<std::size_t>(A.cols()) != n)
            throw InputError(std::string("nonmodal.") + name + ": expected " + std::to_string(n) +
                             "x" + std::to_string(n));
        if (!A.allFinite()) throw InputError(std::string("nonmodal.") + name + ": non-finite entry");
        if (!is_symmetric(A)) throw InputError(std::string("nonmodal.") + name + ": matrix is not symmetric");
    };
    square(sys.M, "M");
    square(sys.C, "C");
    square(sys.K, "K");
    if (!is_positive_definite(sys.M)) throw InputError("nonmodal.M: matrix is not positive definite");
    if (!is_positive_definite(sys.K)) throw InputError("nonmodal.K: matrix is not positive definite");
    if (!is_positive_semidefinite(sys.C)) throw InputError("nonmodal.C: matrix is not positive semidefinite");
    if (sys.P.n() != n || sys.P.rows() != 1) throw InputError("P: dimension mismatch");
    if (sys.Q.n() != n || sys.Q.rows() != n) throw InputError("Q: dimension mismatch");
    check_degrees(sys.P, "P");
    check_degrees(sys.Q, "Q");
    if (static_cast<std::size_t>(sys.forcing.F2.size()) != n)
        throw InputError("forcing.F2: expected " + std::to_string(n) + " values");
    if (!(sys.forcing.epsilon >= 0.0)) throw InputError("forcing.epsilon: must be non-negative");
}

void validate(const FullSystem& sys) {
    const std::size_t N = sys.dofs();
    if (N < 2) throw InputError("nonmodal: a full system needs at least two degrees of freedom");
    for (const auto* A : {&sys.M, &sys.C, &sys.K})
        if (static_cast<std::size_t>(A->rows()) != N || static_cast<std::size_t>(A->cols()) != N)
            throw InputError("nonmodal: matrices must all be square of the same size");
    if (!is_symmetric(sys.M)) throw InputError("nonmodal.M: matrix is not symmetric");
    if (!is_symmetric(sys.K)) throw InputError("nonmodal.K: matrix is not symmetric");
    if (!is_symmetric(sys.C)) throw InputError("nonmodal.C: matrix is not symmetric");
    if (!is_positive_definite(sys.M)) throw InputError("nonmodal.M: matrix is not positive definite");
    if (!is_positive_definite(sys.K)) throw InputError("nonmodal.K: matrix is not positive definite");
    if (!is_positive_semidefinite(sys.C)) throw InputError("nonmodal.C: matrix is not positive semidefinite");
    if (sys.F.n() != N || sys.F.rows() != N) throw InputError("Q: dimension mismatch");
    check_degrees(sys.F, "Q");
    if (static_cast<std::size_t>(sys.force.size()) != N)
        throw InputError("forcing.F2: expected " + std::to_string(N) + " values");
    if (sys.mode_shape.size() != 0 && static_cast<std::size_t>(sys.mode_shape.size()) != N)
        throw InputError("mode_shape: expected " + std::to_string(N) + " values");
}

bool is_full_system_json(const json& j) { return j.contains("mode_shape") || !j.contains("modal"); }

MechanicalSystem system_from_json(const json& j) {
    if (!j.is_object()) throw InputError("system: expected a JSON object");
    if (!j.contains("modal") || !j.at("modal").is_object()) throw InputError("modal: missing object");
    if (!j.contains("nonmodal") || !j.at("nonmodal").is_object())
        throw InputError("nonmodal: missing object");
    const json& mo = j.at("modal");
    const json& nm = j.at("nonmodal");
    MechanicalSystem sys;
    if (!mo.contains("m") || !mo.contains("k")) throw InputError("modal: fields m and k are required");
    sys.m = number(mo.at("m"), "modal.m");
    sys.k = number(mo.at("k"), "modal.k");
    sys.c = optional_number(mo, "c", "modal", 0.0);
    if (!nm.contains("M") || !nm.contains("K")) throw InputError("nonmodal: fields M and K are required");
    sys.M = matrix_field(nm.at("M"), "nonmodal.M");
    sys.K = matrix_field(nm.at("K"), "nonmodal.K");
    const std::size_t n = sys.n();
    sys.C = nm.contains("C") ? matrix_field(nm.at("C"), "nonmodal.C")
                             : Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    sys.P = j.contains("P") ? parse_form(j.at("P"), "P", n, 1) : NonlinearForm(n, 1);
    sys.Q = j.contains("Q") ? parse_form(j.at("Q"), "Q", n, n) : NonlinearForm(n, n);
    sys.forcing.F2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (j.contains("forcing")) {
        const json& f = j.at("forcing");
        if (!f.is_object()) throw InputError("forcing: expected an object");
        sys.forcing.F1 = optional_number(f, "F1", "forcing", 0.0);
        if (f.contains("F2")) sys.forcing.F2 = vector_field(f.at("F2"), "forcing.F2", n);
        sys.forcing.Omega = optional_number(f, "Omega", "forcing", 0.0);
        sys.forcing.epsilon = optional_number(f, "epsilon", "forcing", 0.0);
    }
    if (j.contains("provenance") && j.at("provenance").is_string())
        sys.provenance = j.at("provenance").get<std::string>();
    validate(sys);
    return sys;
}

FullSystem full_system_from_json(const json& j) {
    if (!j.is_object()) throw InputError("system: expected a JSON object");
    if (!j.contains("nonmodal") || !j.at("nonmodal").is_object())
        throw InputError("nonmodal: missing object");
    const json& nm = j.at("nonmodal");
    FullSystem sys;
    if (!nm.contains("M") || !nm.contains("K")) throw InputError("nonmodal: fields M and K are required");
    sys.M = matrix_field(nm.at("M"), "nonmodal.M");
    sys.K = matrix_field(nm.at("K"), "nonmodal.K");
    const std::size_t N = sys.dofs();
    sys.C = nm.contains("C") ? matrix_field(nm.at("C"), "nonmodal.C")
                             : Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    if (j.contains("P") && !j.at("P").empty())
        throw InputError("P: full systems carry all nonlinear terms in Q");
    sys.F = j.contains("Q") ? parse_form(j.at("Q"), "Q", N, N) : NonlinearForm(N, N);
    sys.force = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
    if (j.contains("forcing")) {
        const json& f = j.at("forcing");
        if (!f.is_object()) throw InputError("forcing: expected an object");
        if (f.contains("F2")) sys.force = vector_field(f.at("F2"), "forcing.F2", N);
        sys.Omega = optional_number(f, "Omega", "forcing", 0.0);
        sys.epsilon = optional_number(f, "epsilon", "forcing", 0.0);
    }
    if (j.contains("mode_shape")) sys.mode_shape = vector_field(j.at("mode_shape"), "mode_shape", N);
    if (j.contains("provenance") && j.at("provenance").is_string())
        sys.provenance = j.at("provenance").get<std::string>();
    validate(sys);
    return sys;
}

json to_json(const MechanicalSystem& sys) {
    json j;
    j["modal"] = {{"m", sys.m}, {"c", sys.c}, {"k", sys.k}};
    j["nonmodal"] = {{"M", matrix_json(sys.M)}, {"C", matrix_json(sys.C)}, {"K", matrix_json(sys.K)}};
    j["P"] = form_json(sys.P, true);
    j["Q"] = form_json(sys.Q, false);
    j["forcing"] = {{"F1", sys.forcing.F1},
                    {"F2", vector_json(sys.forcing.F2)},
                    {"Omega", sys.forcing.Omega},
                    {"epsilon", sys.forcing.epsilon}};
    if (!sys.provenance.empty()) j["provenance"] = sys.provenance;
    return j;
}

json to_json(const FullSystem& sys) {
    json j;
    j["nonmodal"] = {{"M", matrix_json(sys.M)}, {"C", matrix_json(sys.C)}, {"K", matrix_json(sys.K)}};
    j["Q"] = form_json(sys.F, false);
    j["forcing"] = {{"F2", vector_json(sys.force)}, {"Omega", sys.Omega}, {"epsilon", sys.epsilon}};
    if (sys.mode_shape.size() > 0) j["mode_shape"] = vector_json(sys.mode_shape);
    if (!sys.provenance.empty()) j["provenance"] = sys.provenance;
    return j;
}

MechanicalSystem load_system(const std::string& path) {
    const json j = read_json_file(path);
    if (is_full_system_json(j)) {
        FullSystem full = full_system_from_json(j);
        if (full.mode_shape.size() == 0)
            throw InputError("mode_shape: required to partition a full system");
        MechanicalSystem sys = decouple_modeling_mode(full, full.mode_shape);
        sys.provenance = full.provenance.empty() ? "file:" + path : full.provenance;
        return sys;
    }
    MechanicalSystem sys = system_from_json(j);
    if (sys.provenance.empty()) sys.provenance = "file:" + path;
    return sys;
}

FullSystem load_full_system(const std::string& path) { return full_system_from_json(read_json_file(path)); }

void save_system(const MechanicalSystem& sys, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << to_json(sys).dump(2) << '\n';
}

MechanicalSystem decouple_modeling_mode(const FullSystem& full, const Eigen::VectorXd& mode_shape) {
    MechanicalSystem sys = decouple_modeling_mode(full.M, full.C, full.K, full.F, mode_shape);
    const Eigen::Index N = static_cast<Eigen::Index>(full.dofs());
    const Eigen::VectorXd f = full.force.size() == N ? full.force : Eigen::VectorXd::Zero(N);
    sys.forcing.F1 = sys.basis.col(0).dot(f);
    sys.forcing.F2 = sys.basis.rightCols(N - 1).transpose() * f;
    sys.forcing.Omega = full.Omega;
    sys.forcing.epsilon = full.epsilon;
    sys.provenance = full.provenance;
    validate(sys);
    return sys;
}

MechanicalSystem decouple_modeling_mode(const Eigen::MatrixXd& M, const Eigen::MatrixXd& C,
                                        const Eigen::MatrixXd& K, const NonlinearForm& F,
                                        const Eigen::VectorXd& phi) {
    const Eigen::Index N = M.rows();
    if (N < 2 || phi.size() != N) throw InputError("mode_shape: length must match the full system");
    if (!is_symmetric(M) || !is_symmetric(C) || !is_symmetric(K))
        throw InputError("decouple: full matrices must be symmetric");
    if (phi.norm() == 0.0) throw InputError("mode_shape: zero vector");

    const Eigen::VectorXd Mphi = M * phi;
    const double lambda = phi.dot(K * phi) / phi.dot(Mphi);
    const double res = (K * phi - lambda * Mphi).norm();
    if (res > 1e-8 * K.norm() * phi.norm())
        throw InputError("mode_shape: not an eigenvector of the full linear problem (residual " +
                         std::to_string(res) + ")");

    // Complement orthogonal to M*phi, built by modified Gram-Schmidt on unit vectors.
    Eigen::Index pivot = 0;
    phi.cwiseAbs().maxCoeff(&pivot);
    const Eigen::VectorXd g = Mphi.normalized();
    Eigen::MatrixXd V(N, N - 1);
    Eigen::Index col = 0;
    for (Eigen::Index e = 0; e < N; ++e) {
        if (e == pivot) continue;
        Eigen::VectorXd v = Eigen::VectorXd::Unit(N, e);
        for (int pass = 0; pass < 2; ++pass) {
            v -= g.dot(v) * g;
            for (Eigen::Index p = 0; p < col; ++p) v -= V.col(p).dot(v) * V.col(p);
        }
        const double nv = v.norm();
        if (nv < 1e-10) throw InputError("decouple: complement construction is rank-deficient");
        V.col(col++) = v / nv;
    }

    Eigen::MatrixXd T(N, N);
    T.col(0) = phi;
    T.rightCols(N - 1) = V;

    const Eigen::MatrixXd Mt = T.transpose() * M * T;
    const Eigen::MatrixXd Ct = T.transpose() * C * T;
    const Eigen::MatrixXd Kt = T.transpose() * K * T;
    auto coupling = [N](const Eigen::MatrixXd& A) {
        return A.row(0).tail(N - 1).cwiseAbs().maxCoeff() / std::max(A.cwiseAbs().maxCoeff(), 1e-300);
    };
    if (coupling(Mt) > 1e-10 || coupling(Kt) > 1e-10)
        throw InputError("decouple: linear coupling remains after transformation");
    if (!C.isZero(0.0) && coupling(Ct) > 1e-8)
        throw InputError("decouple: damping couples the modeling mode (non-Rayleigh damping)");

    MechanicalSystem sys;
    sys.m = Mt(0, 0);
    sys.c = Ct(0, 0);
    sys.k = Kt(0, 0);
    sys.M = Mt.bottomRightCorner(N - 1, N - 1);
    sys.C = Ct.bottomRightCorner(N - 1, N - 1);
    sys.K = Kt.bottomRightCorner(N - 1, N - 1);
    sys.M = 0.5 * (sys.M + sys.M.transpose()).eval();
    sys.C = 0.5 * (sys.C + sys.C.transpose()).eval();
    sys.K = 0.5 * (sys.K + sys.K.transpose()).eval();

    const std::size_t n = static_cast<std::size_t>(N - 1);
    const StateLayout full_layout{static_cast<std::size_t>(N)};
    const StateLayout part{n};
    Eigen::MatrixXd map = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(full_layout.size()),
                                                static_cast<Eigen::Index>(part.size()));
    for (Eigen::Index a = 0; a < N; ++a) {
        const auto qa = static_cast<Eigen::Index>(full_layout.y(static_cast<std::size_t>(a)));
        const auto qda = static_cast<Eigen::Index>(full_layout.yd(static_cast<std::size_t>(a)));
        map(qa, StateLayout::x) = T(a, 0);
        map(qda, StateLayout::xd) = T(a, 0);
        for (std::size_t i = 0; i < n; ++i) {
            map(qa, static_cast<Eigen::Index>(part.y(i))) = T(a, static_cast<Eigen::Index>(1 + i));
            map(qda, static_cast<Eigen::Index>(part.yd(i))) = T(a, static_cast<Eigen::Index>(1 + i));
        }
    }
    const NonlinearForm Fs = F.substitute(map, n);
    sys.P = Fs.project(T.col(0).transpose());
    sys.Q = Fs.project(V.transpose());
    sys.forcing.F2 = Eigen::VectorXd::Zero(N - 1);
    sys.basis = T;
    validate(sys);
    return sys;
}

FullSystem to_full(const MechanicalSystem& sys) {
    const Eigen::Index n = static_cast<Eigen::Index>(sys.n());
    const Eigen::Index N = n + 1;
    FullSystem full;
    full.M = Eigen::MatrixXd::Zero(N, N);
    full.C = Eigen::MatrixXd::Zero(N, N);
    full.K = Eigen::MatrixXd::Zero(N, N);
    full.M(0, 0) = sys.m;
    full.C(0, 0) = sys.c;
    full.K(0, 0) = sys.k;
    full.M.bottomRightCorner(n, n) = sys.M;
    full.C.bottomRightCorner(n, n) = sys.C;
    full.K.bottomRightCorner(n, n) = sys.K;

    const StateLayout part{sys.n()};
    const StateLayout fl{static_cast<std::size_t>(N)};
    Eigen::MatrixXd map = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(part.size()),
                                                static_cast<Eigen::Index>(fl.size()));
    map(StateLayout::x, static_cast<Eigen::Index>(fl.y(0))) = 1.0;
    map(StateLayout::xd, static_cast<Eigen::Index>(fl.yd(0))) = 1.0;
    for (std::size_t i = 0; i < sys.n(); ++i) {
        map(static_cast<Eigen::Index>(part.y(i)), static_cast<Eigen::Index>(fl.y(i + 1))) = 1.0;
        map(static_cast<Eigen::Index>(part.yd(i)), static_cast<Eigen::Index>(fl.yd(i + 1))) = 1.0;
    }
    Eigen::MatrixXd E0 = Eigen::MatrixXd::Zero(N, 1);
    E0(0, 0) = 1.0;
    Eigen::MatrixXd E1 = Eigen::MatrixXd::Zero(N, n);
    E1.bottomRows(n).setIdentity();
    full.F = sys.P.substitute(map, static_cast<std::size_t>(N)).project(E0);
    const NonlinearForm Qf = sys.Q.substitute(map, static_cast<std::size_t>(N)).project(E1);
    for (const auto& [key, c] : Qf.terms()) full.F.add(key, c);
    full.force = Eigen::VectorXd::Zero(N);
    full.force[0] = sys.forcing.F1;
    if (sys.forcing.F2.size() == n) full.force.tail(n) = sys.forcing.F2;
    full.Omega = sys.forcing.Omega;
    full.epsilon = sys.forcing.epsilon;
    full.mode_shape = Eigen::VectorXd::Unit(N, 0);
    full.provenance = sys.provenance;
    return full;
}

ModalSystem modal_transform(const MechanicalSystem& sys) {
    validate(sys);
    const Eigen::Index n = static_cast<Eigen::Index>(sys.n());
    ModalSystem ms;
    ms.mass = sys.m;
    ms.omega0 = std::sqrt(sys.k / sys.m);
    ms.zeta = sys.c / (2.0 * sys.m * ms.omega0);

    Eigen::MatrixXd Phi(n, n);
    Eigen::VectorXd w2(n);
    const bool diagonal = sys.M.isDiagonal(0.0) && sys.K.isDiagonal(0.0);
    if (diagonal) {
        Phi.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            Phi(i, i) = 1.0 / std::sqrt(sys.M(i, i));
            w2[i] = sys.K(i, i) / sys.M(i, i);
        }
    } else {
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(sys.K, sys.M);
        if (ges.info() != Eigen::Success) throw NumericalError("modal transform: eigen solver failed");
        Phi = ges.eigenvectors();
        w2 = ges.eigenvalues();
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index p = 0;
            Phi.col(i).cwiseAbs().maxCoeff(&p);
            if (Phi(p, i) < 0.0) Phi.col(i) *= -1.0;
            Phi.col(i) /= std::sqrt(Phi.col(i).dot(sys.M * Phi.col(i)));
        }
    }
    if (w2.minCoeff() <= 0.0) throw InputError("modal transform: non-positive modal stiffness");

    const Eigen::MatrixXd D = Phi.transpose() * sys.C * Phi;
    if (!D.isZero(0.0)) {
        const Eigen::MatrixXd off = D - Eigen::MatrixXd(D.diagonal().asDiagonal());
        if (off.cwiseAbs().maxCoeff() >= 1e-8 * D.norm())
            throw InputError("non-Rayleigh damping: modal damping matrix is not diagonal");
    }
    ms.omega = w2.cwiseSqrt();
    ms.zeta_vec = D.diagonal().cwiseQuotient(2.0 * ms.omega);
    for (Eigen::Index i = 0; i < n; ++i)
        if (ms.zeta_vec[i] >= 1.0)
            throw PreconditionError("modal transform: non-modeling mode " + std::to_string(i + 1) +
                                    " is overdamped");
    ms.Phi2 = Phi;

    const StateLayout L{sys.n()};
    Eigen::MatrixXd map = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L.size()),
                                                static_cast<Eigen::Index>(L.size()));
    map(0, 0) = 1.0;
    map(1, 1) = 1.0;
    map.block(2, 2, n, n) = Phi;
    map.block(2 + n, 2 + n, n, n) = Phi;
    ms.R = sys.P.substitute(map, sys.n()).scaled(1.0 / sys.m);
    ms.S = sys.Q.substitute(map, sys.n()).project(Phi.transpose());
    ms.Fhat1 = sys.forcing.F1 / sys.m;
    ms.Fhat2 = Phi.transpose() * sys.forcing.F2;
    ms.Omega = sys.forcing.Omega;
    ms.epsilon = sys.forcing.epsilon;
    return ms;
}

MechanicalSystem conservative_limit(const MechanicalSystem& sys) {
    MechanicalSystem out = sys;
    out.c = 0.0;
    out.C.setZero();
    out.P = sys.P.position_part();
    out.Q = sys.Q.position_part();
    out.forcing.epsilon = 0.0;
    return out;
}

ModalSystem conservative_limit(const ModalSystem& msys) {
    ModalSystem out = msys;
    out.zeta = 0.0;
    out.zeta_vec.setZero();
    out.R = msys.R.position_part();
    out.S = msys.S.position_part();
    out.epsilon = 0.0;
    return out;
}

MechanicalSystem scale_dissipation(const MechanicalSystem& sys, double s) {
    MechanicalSystem out = sys;
    out.c = s * sys.c;
    out.C = s * sys.C;
    auto scale_form = [s](const NonlinearForm& f) {
        NonlinearForm g(f.n(), f.rows());
        for (const auto& [key, c] : f.terms()) g.add(key, key.is_position_only() ? c : Eigen::VectorXd(s * c));
        return g;
    };
    out.P = scale_form(sys.P);
    out.Q = scale_form(sys.Q);
    return out;
}

bool is_gradient_field(const MechanicalSystem& sys) {
    if (!sys.P.is_position_only() || !sys.Q.is_position_only()) return false;
    const std::size_t n = sys.n();
    const StateLayout L{n};
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> z(L.size(), 0.0);
        z[0] = 0.5 * std::sin(1.3 + 0.7 * trial);
        for (std::size_t i = 0; i < n; ++i) z[L.y(i)] = 0.5 * std::sin(2.1 * static_cast<double>(i + 1) + 0.9 * trial);
        Eigen::MatrixXd Jp = sys.P.jacobian(z);
        Eigen::MatrixXd Jq = sys.Q.jacobian(z);
        Eigen::MatrixXd G(n + 1, n + 1);
        G(0, 0) = Jp(0, 0);
        G.block(0, 1, 1, static_cast<Eigen::Index>(n)) = Jp.block(0, 2, 1, static_cast<Eigen::Index>(n));
        G.block(1, 0, static_cast<Eigen::Index>(n), 1) = Jq.col(0);
        G.block(1, 1, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) =
            Jq.block(0, 2, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const double scale = G.cwiseAbs().maxCoeff();
        if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale + 1e-300) return false;
    }
    return true;
}

PotentialFn polynomial_potential(const MechanicalSystem& sys) {
    if (!is_gradient_field(sys))
        throw PreconditionError("no potential declared: nonlinear forces are not a gradient field");
    return [sys](const Eigen::VectorXd& z) {
        const std::size_t n = sys.n();
        const StateLayout L{n};
        std::vector<double> s(L.size(), 0.0);
        s[0] = z[0];
        for (std::size_t i = 0; i < n; ++i) s[L.y(i)] = z[static_cast<Eigen::Index>(1 + i)];
        const Eigen::VectorXd y = z.tail(static_cast<Eigen::Index>(n));
        double V = 0.5 * sys.k * z[0] * z[0] + 0.5 * y.dot(sys.K * y);
        for (int d = 2; d <= 3; ++d) {
            V += sys.P.homogeneous_part(d).evaluate(s)[0] * z[0] / (d + 1);
            V += sys.Q.homogeneous_part(d).evaluate(s).dot(y) / (d + 1);
        }
        return V;
    };
}

}  // namespace ssmreduce
