#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace ssmreduce {

/// Index layout of the state vector [x, xdot, y_1..y_n, ydot_1..ydot_n].
struct StateLayout {
    std::size_t n = 0;
    std::size_t size() const { return 2 + 2 * n; }
    static constexpr std::size_t x = 0;
    static constexpr std::size_t xd = 1;
    std::size_t y(std::size_t i) const { return 2 + i; }
    std::size_t yd(std::size_t i) const { return 2 + n + i; }
};

/// Exponents (j, k, u, v) of the monomial x^j xdot^k y^u ydot^v.
class MonomialKey {
public:
    MonomialKey() = default;
    MonomialKey(int j, int k, std::vector<int> u, std::vector<int> v);
    static MonomialKey from_exponents(std::vector<int> exponents);

    int j() const { return exps_[0]; }
    int k() const { return exps_[1]; }
    std::size_t n() const { return exps_.empty() ? 0 : (exps_.size() - 2) / 2; }
    int u(std::size_t i) const { return exps_[2 + i]; }
    int v(std::size_t i) const { return exps_[2 + n() + i]; }
    std::vector<int> u() const;
    std::vector<int> v() const;
    const std::vector<int>& exponents() const { return exps_; }

    int degree() const;
    /// True when no velocity appears (k = 0, |v| = 0).
    bool is_position_only() const;

    auto operator<=>(const MonomialKey&) const = default;

private:
    std::vector<int> exps_;
};

/// Vector-valued polynomial over the state [x, xdot, y, ydot].
///
/// Each key maps to a coefficient vector with one entry per target equation.
class NonlinearForm {
public:
    using TermMap = std::map<MonomialKey, Eigen::VectorXd>;

    NonlinearForm() = default;
    NonlinearForm(std::size_t n, std::size_t rows) : n_(n), rows_(rows) {}

    std::size_t n() const { return n_; }
    std::size_t rows() const { return rows_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const TermMap& terms() const { return terms_; }

    void add(const MonomialKey& key, const Eigen::VectorXd& coeff);
    void add(const MonomialKey& key, std::size_t row, double value);
    /// Adds scale * (sum_a w_a z_a)^power to one row.
    void add_linear_power(std::size_t row, double scale,
                          const std::vector<std::pair<std::size_t, double>>& linear, int power);

    Eigen::VectorXd coeff(const MonomialKey& key) const;
    double coeff(const MonomialKey& key, std::size_t row) const;

    Eigen::VectorXd evaluate(std::span<const double> state) const;
    /// rows x state-size matrix of partial derivatives.
    Eigen::MatrixXd jacobian(std::span<const double> state) const;

    /// Change of variables old_state = map * new_state, map of size (2+2n) x (2+2 n_new).
    NonlinearForm substitute(const Eigen::MatrixXd& map, std::size_t n_new) const;
    /// Coefficients pushed through a left multiplication: c -> A c.
    NonlinearForm project(const Eigen::MatrixXd& A) const;
    NonlinearForm scaled(double s) const;
    /// Terms with total degree d only.
    NonlinearForm homogeneous_part(int d) const;
    /// Drops all velocity-dependent terms.
    NonlinearForm position_part() const;

    bool is_position_only() const;
    int min_degree() const;
    int max_degree() const;

    /// Coefficient of x^j xdot^k (no y, ydot).
    Eigen::VectorXd pure(int j, int k) const;
    /// Columns i: coefficient of x^j xdot^k y_i.
    Eigen::MatrixXd linear_in_y(int j, int k) const;
    /// Columns i: coefficient of x^j xdot^k ydot_i.
    Eigen::MatrixXd linear_in_ydot(int j, int k) const;

    MonomialKey key(int j, int k) const;
    MonomialKey key_y(int j, int k, std::size_t i) const;
    MonomialKey key_ydot(int j, int k, std::size_t i) const;

    bool operator==(const NonlinearForm&) const = default;

private:
    std::size_t n_ = 0;
    std::size_t rows_ = 0;
    TermMap terms_;
};

/// Flattened form for fast repeated evaluation in right-hand sides.
class CompiledForm {
public:
    CompiledForm() = default;
    explicit CompiledForm(const NonlinearForm& form);

    std::size_t rows() const { return rows_; }
    /// out += form(state)
    void accumulate(const double* state, double* out) const;

private:
    struct Term {
        std::vector<int> factors;  // variable index repeated per exponent
        std::vector<std::pair<int, double>> coeffs;
    };
    std::size_t rows_ = 0;
    std::vector<Term> terms_;
};

}  // namespace ssmreduce
