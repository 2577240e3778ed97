#pragma once

#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "incompat/hermitian.hpp"

namespace incompat::conic {

enum class Status { Optimal, Infeasible, Unbounded, Inaccurate };

inline const char* status_name(Status s) {
    switch (s) {
        case Status::Optimal: return "Optimal";
        case Status::Infeasible: return "Infeasible";
        case Status::Unbounded: return "Unbounded";
        case Status::Inaccurate: return "Inaccurate";
    }
    return "?";
}

inline constexpr double kDefaultSolveTol = 1e-8;

/// A distance-type objective value nu is treated as zero (membership) iff it
/// is at most this margin.
inline constexpr double kMembershipMargin = 1e-6;

inline constexpr double kFreeScalar = -std::numeric_limits<double>::infinity();

/// Thrown by decision procedures when the solver status is Inaccurate:
/// the answer is neither membership nor non-membership.
class inconclusive_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Real-valued affine functional of the declared variables. Matrix terms are
/// Hermitian pairings Tr[P X_v]; scalar terms are plain coefficients.
struct LinearExpr {
    struct MatTerm {
        int var;
        CMatrix pairing;
    };
    struct ScalarTerm {
        int var;
        double coeff;
    };
    std::vector<MatTerm> mat_terms;
    std::vector<ScalarTerm> scalar_terms;
    double constant = 0.0;

    LinearExpr& add_matrix(int var, CMatrix pairing) {
        mat_terms.push_back({var, std::move(pairing)});
        return *this;
    }
    LinearExpr& add_scalar(int var, double coeff) {
        scalar_terms.push_back({var, coeff});
        return *this;
    }
};

/// Minimal model of a small semidefinite program: Hermitian PSD matrix
/// variables, lower-bounded real scalar variables, affine equality
/// constraints, and a linear objective to minimize.
class Problem {
public:
    struct MatVar {
        std::string label;
        int dim;
        /// When set, the variable is restricted to real symmetric matrices.
        /// Callers may declare this only when the problem is known to admit a
        /// real optimal solution (e.g. all input effects are real).
        bool real_var;
    };
    struct ScalarVar {
        std::string label;
        double lower;  // kFreeScalar for an unrestricted variable
    };
    struct Constraint {
        LinearExpr lhs;
        double rhs;
    };

    int add_psd_var(std::string label, int dim, bool real_var = false) {
        if (dim < 1) throw std::invalid_argument("add_psd_var: dim must be positive");
        mat_vars_.push_back({std::move(label), dim, real_var});
        return static_cast<int>(mat_vars_.size()) - 1;
    }

    int add_scalar_var(std::string label, double lower = 0.0) {
        scalar_vars_.push_back({std::move(label), lower});
        return static_cast<int>(scalar_vars_.size()) - 1;
    }

    void add_equality(LinearExpr lhs, double rhs) {
        validate_expr(lhs);
        constraints_.push_back({std::move(lhs), rhs});
    }

    /// x <= upper, realized as x + slack = upper with slack >= 0.
    void add_scalar_upper_bound(int scalar_var, double upper) {
        const int slack = add_scalar_var(scalar_vars_.at(static_cast<std::size_t>(scalar_var)).label +
                                             "_ub_slack",
                                         0.0);
        LinearExpr e;
        e.add_scalar(scalar_var, 1.0).add_scalar(slack, 1.0);
        add_equality(std::move(e), upper);
    }

    void set_objective(LinearExpr obj) {
        validate_expr(obj);
        objective_ = std::move(obj);
    }

    const std::vector<MatVar>& mat_vars() const { return mat_vars_; }
    const std::vector<ScalarVar>& scalar_vars() const { return scalar_vars_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const LinearExpr& objective() const { return objective_; }

    int mat_dim(int var) const { return mat_vars_.at(static_cast<std::size_t>(var)).dim; }

    /// Plain-text dump of the problem in a sparse block format (one line per
    /// nonzero pairing entry), for cross-checking against external solvers.
    /// Layout is documented in the repository README.
    void dump(std::ostream& os) const;

private:
    void validate_expr(const LinearExpr& e) const {
        for (const auto& t : e.mat_terms) {
            if (t.var < 0 || t.var >= static_cast<int>(mat_vars_.size())) {
                throw std::invalid_argument("LinearExpr: unknown matrix variable");
            }
            if (t.pairing.rows() != mat_dim(t.var) || t.pairing.cols() != mat_dim(t.var)) {
                throw std::invalid_argument("LinearExpr: pairing dimension mismatch");
            }
            if (hermiticity_defect(t.pairing) > 100 * kHermitianTol) {
                throw std::invalid_argument("LinearExpr: pairing matrix is not Hermitian");
            }
        }
        for (const auto& t : e.scalar_terms) {
            if (t.var < 0 || t.var >= static_cast<int>(scalar_vars_.size())) {
                throw std::invalid_argument("LinearExpr: unknown scalar variable");
            }
        }
    }

    std::vector<MatVar> mat_vars_;
    std::vector<ScalarVar> scalar_vars_;
    std::vector<Constraint> constraints_;
    LinearExpr objective_;
};

inline void Problem::dump(std::ostream& os) const {
    os << "psdvars " << mat_vars_.size() << "\n";
    for (std::size_t v = 0; v < mat_vars_.size(); ++v) {
        os << "var " << v << " dim " << mat_vars_[v].dim << " label " << mat_vars_[v].label << "\n";
    }
    os << "scalars " << scalar_vars_.size() << "\n";
    for (std::size_t v = 0; v < scalar_vars_.size(); ++v) {
        os << "scalar " << v << " lower " << scalar_vars_[v].lower << " label "
           << scalar_vars_[v].label << "\n";
    }
    auto dump_expr = [&os](const LinearExpr& e) {
        for (const auto& t : e.mat_terms) {
            for (Eigen::Index i = 0; i < t.pairing.rows(); ++i) {
                for (Eigen::Index j = i; j < t.pairing.cols(); ++j) {
                    const Complex z = t.pairing(i, j);
                    if (std::abs(z) > 0) {
                        os << "  m " << t.var << " " << i << " " << j << " " << z.real() << " "
                           << z.imag() << "\n";
                    }
                }
            }
        }
        for (const auto& t : e.scalar_terms) {
            if (t.coeff != 0.0) os << "  s " << t.var << " " << t.coeff << "\n";
        }
    };
    os << "objective constant " << objective_.constant << "\n";
    dump_expr(objective_);
    os << "constraints " << constraints_.size() << "\n";
    for (std::size_t c = 0; c < constraints_.size(); ++c) {
        os << "eq " << c << " rhs " << constraints_[c].rhs << "\n";
        dump_expr(constraints_[c].lhs);
    }
}

/// Solve result. Matrix/scalar witness values are keyed by variable label.
struct Solution {
    Status status = Status::Inaccurate;
    double objective_value = 0.0;
    std::map<std::string, CMatrix> matrix_values;
    std::map<std::string, double> scalar_values;
    double max_residual = 0.0;
    int iterations = 0;

    bool optimal() const { return status == Status::Optimal; }

    const CMatrix& matrix(const std::string& label) const {
        auto it = matrix_values.find(label);
        if (it == matrix_values.end()) throw std::invalid_argument("Solution: no matrix " + label);
        return it->second;
    }
    double scalar(const std::string& label) const {
        auto it = scalar_values.find(label);
        if (it == scalar_values.end()) throw std::invalid_argument("Solution: no scalar " + label);
        return it->second;
    }
};

/// Hermitian-operator-valued affine expression in the problem's variables.
/// Supports terms c*X_v, K*Tr[P X_v], K*s, and constants; enough to express
/// every marginal, completeness, and noise-model constraint in the library.
class OperatorExpr {
public:
    explicit OperatorExpr(int dim) : dim_(dim), constant_(CMatrix::Zero(dim, dim)) {}

    int dim() const { return dim_; }

    OperatorExpr& add_constant(const CMatrix& c) {
        constant_ += c;
        return *this;
    }
    OperatorExpr& add_matrix_var(int var, double coeff) {
        scaled_vars_.push_back({var, coeff});
        return *this;
    }
    /// out_coeff * Tr[pairing X_var]; both matrices Hermitian.
    OperatorExpr& add_traced_term(int var, CMatrix out_coeff, CMatrix pairing) {
        traced_terms_.push_back({var, std::move(out_coeff), std::move(pairing)});
        return *this;
    }
    OperatorExpr& add_scalar_var(int var, CMatrix coeff) {
        scalar_terms_.push_back({var, std::move(coeff)});
        return *this;
    }

    OperatorExpr& negate() {
        constant_ = -constant_;
        for (auto& t : scaled_vars_) t.coeff = -t.coeff;
        for (auto& t : traced_terms_) t.out_coeff = -t.out_coeff;
        for (auto& t : scalar_terms_) t.coeff = -t.coeff;
        return *this;
    }

    OperatorExpr& add(const OperatorExpr& other) {
        if (other.dim_ != dim_) throw std::invalid_argument("OperatorExpr::add: dim mismatch");
        constant_ += other.constant_;
        scaled_vars_.insert(scaled_vars_.end(), other.scaled_vars_.begin(),
                            other.scaled_vars_.end());
        traced_terms_.insert(traced_terms_.end(), other.traced_terms_.begin(),
                             other.traced_terms_.end());
        scalar_terms_.insert(scalar_terms_.end(), other.scalar_terms_.begin(),
                             other.scalar_terms_.end());
        return *this;
    }

    /// True when every ingredient matrix is real and every referenced matrix
    /// variable is itself restricted to real values, so the expression can
    /// only take real symmetric values.
    bool real_valued(const Problem& p) const {
        auto real_mat = [](const CMatrix& m) { return m.imag().cwiseAbs().maxCoeff() <= 1e-14; };
        if (!real_mat(constant_)) return false;
        for (const auto& t : scaled_vars_) {
            if (!p.mat_vars()[static_cast<std::size_t>(t.var)].real_var) return false;
        }
        for (const auto& t : traced_terms_) {
            if (!real_mat(t.out_coeff)) return false;
            if (!p.mat_vars()[static_cast<std::size_t>(t.var)].real_var) return false;
            if (!real_mat(t.pairing)) return false;
        }
        for (const auto& t : scalar_terms_) {
            if (!real_mat(t.coeff)) return false;
        }
        return true;
    }

    /// The real-linear functional Tr[B * expr] for Hermitian B, split into a
    /// variable part and the constant Tr[B * constant].
    std::pair<LinearExpr, double> paired_with(const CMatrix& basis) const {
        LinearExpr e;
        for (const auto& t : scaled_vars_) {
            e.add_matrix(t.var, t.coeff * basis);
        }
        for (const auto& t : traced_terms_) {
            const double w = (basis * t.out_coeff).trace().real();
            if (w != 0.0) e.add_matrix(t.var, w * t.pairing);
        }
        for (const auto& t : scalar_terms_) {
            e.add_scalar(t.var, (basis * t.coeff).trace().real());
        }
        return {std::move(e), (basis * constant_).trace().real()};
    }

private:
    struct ScaledVar {
        int var;
        double coeff;
    };
    struct TracedTerm {
        int var;
        CMatrix out_coeff;
        CMatrix pairing;
    };
    struct ScalarTerm {
        int var;
        CMatrix coeff;
    };

    int dim_;
    CMatrix constant_;
    std::vector<ScaledVar> scaled_vars_;
    std::vector<TracedTerm> traced_terms_;
    std::vector<ScalarTerm> scalar_terms_;
};

/// expr == 0, expanded over an orthonormal Hermitian basis into dim^2 real
/// equality constraints. For real-valued expressions the rows paired with the
/// imaginary basis elements hold identically and are omitted.
inline void add_operator_equality(Problem& p, const OperatorExpr& expr) {
    const bool real_expr = expr.real_valued(p);
    for (const CMatrix& b : hermitian_basis(expr.dim())) {
        if (real_expr && b.imag().cwiseAbs().maxCoeff() > 1e-14) continue;
        auto [lhs, constant] = expr.paired_with(b);
        p.add_equality(std::move(lhs), -constant);
    }
}

/// -lambda 1 <= expr <= lambda 1 via two auxiliary PSD slack variables.
/// Creates (and returns) the scalar variable lambda >= 0 under `lambda_label`.
inline int operator_interval_constraint(Problem& p, const OperatorExpr& expr,
                                        const std::string& lambda_label) {
    const int lambda = p.add_scalar_var(lambda_label, 0.0);
    const int d = expr.dim();
    const bool real_slack = expr.real_valued(p);
    const int slack_hi = p.add_psd_var(lambda_label + "_hi", d, real_slack);
    const int slack_lo = p.add_psd_var(lambda_label + "_lo", d, real_slack);
    // lambda 1 - expr - S_hi = 0
    OperatorExpr hi = expr;
    hi.negate();
    hi.add_scalar_var(lambda, identity_c(d));
    hi.add_matrix_var(slack_hi, -1.0);
    add_operator_equality(p, hi);
    // lambda 1 + expr - S_lo = 0
    OperatorExpr lo = expr;
    lo.add_scalar_var(lambda, identity_c(d));
    lo.add_matrix_var(slack_lo, -1.0);
    add_operator_equality(p, lo);
    return lambda;
}

}  // namespace incompat::conic
