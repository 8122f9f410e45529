#include "ssmreduce/polynomial.hpp"

#include "ssmreduce/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssmreduce {

namespace {

using Linear = std::vector<std::pair<std::size_t, double>>;

// Expands a product of linear forms into monomials keyed by sorted variable lists.
void expand_product(const std::vector<const Linear*>& factors, std::size_t depth,
                    std::vector<int>& vars, double weight,
                    std::map<std::vector<int>, double>& out) {
    if (depth == factors.size()) {
        std::vector<int> key = vars;
        std::sort(key.begin(), key.end());
        out[key] += weight;
        return;
    }
    for (const auto& [var, w] : *factors[depth]) {
        vars.push_back(static_cast<int>(var));
        expand_product(factors, depth + 1, vars, weight * w, out);
        vars.pop_back();
    }
}

struct DenseTerm {
    std::vector<int> vars;
    const Eigen::VectorXd* coeff;
};

// Change of basis for homogeneous quadratic or cubic terms through dense tensor contractions.
void dense_substitute(const std::vector<DenseTerm>& terms, int degree, const Eigen::MatrixXd& map,
                      std::size_t rows, std::map<std::vector<int>, Eigen::VectorXd>& acc) {
    const Eigen::Index N = map.rows();
    const Eigen::Index M = map.cols();
    const Eigen::MatrixXd Mt = map.transpose();
    auto add = [&](std::vector<int> vars, std::size_t r, double v) {
        if (v == 0.0) return;
        auto [it, inserted] = acc.try_emplace(std::move(vars), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows)));
        it->second[static_cast<Eigen::Index>(r)] += v;
    };
    for (std::size_t r = 0; r < rows; ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        bool any = false;
        for (const auto& t : terms) any = any || (*t.coeff)[ri] != 0.0;
        if (!any) continue;
        if (degree == 2) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(N, N);
            for (const auto& t : terms) T(t.vars[0], t.vars[1]) += (*t.coeff)[ri];
            const Eigen::MatrixXd C = Mt * T * map;
            for (int i = 0; i < M; ++i)
                for (int j = i; j < M; ++j)
                    add({i, j}, r, i == j ? C(i, i) : C(i, j) + C(j, i));
            continue;
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(N * N, N);
        for (const auto& t : terms) T(t.vars[0] + N * t.vars[1], t.vars[2]) += (*t.coeff)[ri];
        const Eigen::MatrixXd A = T * map;
        std::vector<Eigen::MatrixXd> C(static_cast<std::size_t>(M));
        for (Eigen::Index k = 0; k < M; ++k)
            C[static_cast<std::size_t>(k)] = Mt * Eigen::Map<const Eigen::MatrixXd>(A.col(k).data(), N, N) * map;
        auto c = [&](int i, int j, int k) { return C[static_cast<std::size_t>(k)](i, j); };
        for (int i = 0; i < M; ++i)
            for (int j = i; j < M; ++j)
                for (int k = j; k < M; ++k) {
                    const double sum = c(i, j, k) + c(i, k, j) + c(j, i, k) + c(j, k, i) + c(k, i, j) + c(k, j, i);
                    const double mult = (i == j && j == k) ? 6.0 : (i == j || j == k) ? 2.0 : 1.0;
                    add({i, j, k}, r, sum / mult);
                }
    }
}

std::vector<int> exponents_from_vars(const std::vector<int>& vars, std::size_t size) {
    std::vector<int> e(size, 0);
    for (int v : vars) ++e[static_cast<std::size_t>(v)];
    return e;
}

void prune(NonlinearForm::TermMap& terms) {
    double scale = 0.0;
    for (const auto& [k, c] : terms) scale = std::max(scale, c.cwiseAbs().maxCoeff());
    const double floor = 1e-14 * scale;
    for (auto it = terms.begin(); it != terms.end();) {
        Eigen::VectorXd& c = it->second;
        for (Eigen::Index r = 0; r < c.size(); ++r)
            if (std::abs(c[r]) <= floor) c[r] = 0.0;
        if (c.isZero(0.0))
            it = terms.erase(it);
        else
            ++it;
    }
}

}  // namespace

MonomialKey::MonomialKey(int j, int k, std::vector<int> u, std::vector<int> v) {
    if (u.size() != v.size()) throw InputError("monomial: u and v must have equal length");
    exps_.reserve(2 + 2 * u.size());
    exps_.push_back(j);
    exps_.push_back(k);
    exps_.insert(exps_.end(), u.begin(), u.end());
    exps_.insert(exps_.end(), v.begin(), v.end());
    for (int e : exps_)
        if (e < 0) throw InputError("monomial: negative exponent");
}

MonomialKey MonomialKey::from_exponents(std::vector<int> exponents) {
    if (exponents.size() < 2 || exponents.size() % 2 != 0)
        throw InputError("monomial: exponent vector has invalid length");
    MonomialKey key;
    key.exps_ = std::move(exponents);
    return key;
}

std::vector<int> MonomialKey::u() const {
    return {exps_.begin() + 2, exps_.begin() + 2 + static_cast<std::ptrdiff_t>(n())};
}

std::vector<int> MonomialKey::v() const {
    return {exps_.begin() + 2 + static_cast<std::ptrdiff_t>(n()), exps_.end()};
}

int MonomialKey::degree() const { return std::accumulate(exps_.begin(), exps_.end(), 0); }

bool MonomialKey::is_position_only() const {
    if (k() != 0) return false;
    for (std::size_t i = 0; i < n(); ++i)
        if (v(i) != 0) return false;
    return true;
}

void NonlinearForm::add(const MonomialKey& key, const Eigen::VectorXd& coeff) {
    if (key.n() != n_) throw InputError("nonlinear form: monomial dimension mismatch");
    if (static_cast<std::size_t>(coeff.size()) != rows_)
        throw InputError("nonlinear form: coefficient length mismatch");
    auto [it, inserted] = terms_.try_emplace(key, coeff);
    if (!inserted) it->second += coeff;
    if (it->second.isZero(0.0)) terms_.erase(it);
}

void NonlinearForm::add(const MonomialKey& key, std::size_t row, double value) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows_));
    c[static_cast<Eigen::Index>(row)] = value;
    add(key, c);
}

void NonlinearForm::add_linear_power(std::size_t row, double scale, const Linear& linear,
                                     int power) {
    std::vector<const Linear*> factors(static_cast<std::size_t>(power), &linear);
    std::map<std::vector<int>, double> expanded;
    std::vector<int> vars;
    expand_product(factors, 0, vars, scale, expanded);
    const std::size_t size = StateLayout{n_}.size();
    for (const auto& [vs, w] : expanded)
        if (w != 0.0) add(MonomialKey::from_exponents(exponents_from_vars(vs, size)), row, w);
}

Eigen::VectorXd NonlinearForm::coeff(const MonomialKey& key) const {
    auto it = terms_.find(key);
    if (it == terms_.end()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows_));
    return it->second;
}

double NonlinearForm::coeff(const MonomialKey& key, std::size_t row) const {
    auto it = terms_.find(key);
    return it == terms_.end() ? 0.0 : it->second[static_cast<Eigen::Index>(row)];
}

Eigen::VectorXd NonlinearForm::evaluate(std::span<const double> state) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows_));
    for (const auto& [key, c] : terms_) {
        double prod = 1.0;
        const auto& e = key.exponents();
        for (std::size_t a = 0; a < e.size(); ++a)
            if (e[a] != 0) prod *= std::pow(state[a], e[a]);
        out += prod * c;
    }
    return out;
}

Eigen::MatrixXd NonlinearForm::jacobian(std::span<const double> state) const {
    const std::size_t size = StateLayout{n_}.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_),
                                              static_cast<Eigen::Index>(size));
    for (const auto& [key, c] : terms_) {
        const auto& e = key.exponents();
        for (std::size_t a = 0; a < size; ++a) {
            if (e[a] == 0) continue;
            double d = e[a] * std::pow(state[a], e[a] - 1);
            for (std::size_t b = 0; b < size; ++b)
                if (b != a && e[b] != 0) d *= std::pow(state[b], e[b]);
            J.col(static_cast<Eigen::Index>(a)) += d * c;
        }
    }
    return J;
}

NonlinearForm NonlinearForm::substitute(const Eigen::MatrixXd& map, std::size_t n_new) const {
    const std::size_t old_size = StateLayout{n_}.size();
    const std::size_t new_size = StateLayout{n_new}.size();
    if (static_cast<std::size_t>(map.rows()) != old_size ||
        static_cast<std::size_t>(map.cols()) != new_size)
        throw InputError("nonlinear form: substitution map has wrong shape");

    std::vector<Linear> rows(old_size);
    for (std::size_t a = 0; a < old_size; ++a)
        for (std::size_t b = 0; b < new_size; ++b) {
            double w = map(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            if (w != 0.0) rows[a].emplace_back(b, w);
        }

    NonlinearForm out(n_new, rows_);
    std::map<std::vector<int>, Eigen::VectorXd> acc;
    std::vector<DenseTerm> dense[2];
    double leaves[2] = {0.0, 0.0};
    for (const auto& [key, c] : terms_) {
        std::vector<int> vars;
        const auto& e = key.exponents();
        double count = 1.0;
        for (std::size_t a = 0; a < old_size; ++a)
            for (int p = 0; p < e[a]; ++p) {
                vars.push_back(static_cast<int>(a));
                count *= static_cast<double>(rows[a].size());
            }
        if (vars.size() == 2 || vars.size() == 3) {
            const std::size_t d = vars.size() - 2;
            leaves[d] += count;
            dense[d].push_back({std::move(vars), &c});
        }
    }
    const auto no = static_cast<double>(old_size);
    const auto nn = static_cast<double>(new_size);
    const bool use_dense[2] = {no * no * nn * 2.0 < 50.0 * leaves[0],
                               old_size <= 128 && no * no * no * nn * 3.0 < 50.0 * leaves[1]};
    for (int d = 0; d < 2; ++d)
        if (use_dense[d]) dense_substitute(dense[d], d + 2, map, rows_, acc);

    for (const auto& [key, c] : terms_) {
        std::vector<const Linear*> factors;
        const auto& e = key.exponents();
        for (std::size_t a = 0; a < old_size; ++a)
            for (int p = 0; p < e[a]; ++p) factors.push_back(&rows[a]);
        if ((factors.size() == 2 && use_dense[0]) || (factors.size() == 3 && use_dense[1])) continue;
        std::map<std::vector<int>, double> expanded;
        std::vector<int> vars;
        expand_product(factors, 0, vars, 1.0, expanded);
        for (const auto& [vs, w] : expanded) {
            auto [it, inserted] = acc.try_emplace(vs, w * c);
            if (!inserted) it->second += w * c;
        }
    }
    for (auto& [vs, c] : acc)
        out.terms_.emplace(MonomialKey::from_exponents(exponents_from_vars(vs, new_size)),
                           std::move(c));
    prune(out.terms_);
    return out;
}

NonlinearForm NonlinearForm::project(const Eigen::MatrixXd& A) const {
    if (static_cast<std::size_t>(A.cols()) != rows_)
        throw InputError("nonlinear form: projection has wrong shape");
    NonlinearForm out(n_, static_cast<std::size_t>(A.rows()));
    for (const auto& [key, c] : terms_) out.terms_.emplace(key, A * c);
    prune(out.terms_);
    return out;
}

NonlinearForm NonlinearForm::scaled(double s) const {
    NonlinearForm out(n_, rows_);
    if (s == 0.0) return out;
    for (const auto& [key, c] : terms_) out.terms_.emplace(key, s * c);
    return out;
}

NonlinearForm NonlinearForm::homogeneous_part(int d) const {
    NonlinearForm out(n_, rows_);
    for (const auto& [key, c] : terms_)
        if (key.degree() == d) out.terms_.emplace(key, c);
    return out;
}

NonlinearForm NonlinearForm::position_part() const {
    NonlinearForm out(n_, rows_);
    for (const auto& [key, c] : terms_)
        if (key.is_position_only()) out.terms_.emplace(key, c);
    return out;
}

bool NonlinearForm::is_position_only() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const auto& t) { return t.first.is_position_only(); });
}

int NonlinearForm::min_degree() const {
    int d = 0;
    bool first = true;
    for (const auto& [key, c] : terms_) {
        d = first ? key.degree() : std::min(d, key.degree());
        first = false;
    }
    return d;
}

int NonlinearForm::max_degree() const {
    int d = 0;
    for (const auto& [key, c] : terms_) d = std::max(d, key.degree());
    return d;
}

MonomialKey NonlinearForm::key(int j, int k) const {
    return MonomialKey(j, k, std::vector<int>(n_, 0), std::vector<int>(n_, 0));
}

MonomialKey NonlinearForm::key_y(int j, int k, std::size_t i) const {
    std::vector<int> u(n_, 0);
    u[i] = 1;
    return MonomialKey(j, k, u, std::vector<int>(n_, 0));
}

MonomialKey NonlinearForm::key_ydot(int j, int k, std::size_t i) const {
    std::vector<int> v(n_, 0);
    v[i] = 1;
    return MonomialKey(j, k, std::vector<int>(n_, 0), v);
}

Eigen::VectorXd NonlinearForm::pure(int j, int k) const { return coeff(key(j, k)); }

Eigen::MatrixXd NonlinearForm::linear_in_y(int j, int k) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i)
        out.col(static_cast<Eigen::Index>(i)) = coeff(key_y(j, k, i));
    return out;
}

Eigen::MatrixXd NonlinearForm::linear_in_ydot(int j, int k) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i)
        out.col(static_cast<Eigen::Index>(i)) = coeff(key_ydot(j, k, i));
    return out;
}

CompiledForm::CompiledForm(const NonlinearForm& form) : rows_(form.rows()) {
    for (const auto& [key, c] : form.terms()) {
        Term t;
        const auto& e = key.exponents();
        for (std::size_t a = 0; a < e.size(); ++a)
            for (int p = 0; p < e[a]; ++p) t.factors.push_back(static_cast<int>(a));
        for (Eigen::Index r = 0; r < c.size(); ++r)
            if (c[r] != 0.0) t.coeffs.emplace_back(static_cast<int>(r), c[r]);
        terms_.push_back(std::move(t));
    }
}

void CompiledForm::accumulate(const double* state, double* out) const {
    for (const Term& t : terms_) {
        double prod = 1.0;
        for (int f : t.factors) prod *= state[f];
        for (const auto& [r, c] : t.coeffs) out[r] += c * prod;
    }
}

}  // namespace ssmreduce
