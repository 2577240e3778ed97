#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "incompat/assemblage.hpp"
#include "incompat/jm.hpp"

namespace incompat {

/// Traceless Hermitian expansion basis with Tr[B_j B_k] = 2 delta_jk, used to
/// reduce the "for all states" matching condition to finitely many linear
/// constraints on Bloch coefficients.
class OperatorBasis {
public:
    explicit OperatorBasis(int dim) : dim_(dim), elements_(gellmann_basis(dim)) {
        for (std::size_t j = 0; j < elements_.size(); ++j) {
            if (std::abs(elements_[j].trace()) > kHermitianTol) {
                throw std::invalid_argument("OperatorBasis: element not traceless");
            }
            for (std::size_t k = j + 1; k < elements_.size(); ++k) {
                if (std::abs((elements_[j] * elements_[k]).trace()) > kHermitianTol) {
                    throw std::invalid_argument("OperatorBasis: elements not orthogonal");
                }
            }
        }
    }

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(elements_.size()); }
    const CMatrix& element(int k) const { return elements_.at(static_cast<std::size_t>(k)); }

private:
    int dim_;
    std::vector<CMatrix> elements_;
};

/// Parent POVM on n tensor copies, in canonical vector-outcome form (one
/// outcome coordinate per setting of the simulated assemblage).
struct MultiCopyParent {
    int n_copies = 1;
    int copy_dim = 2;  // single-copy dimension d; effects act on d^n
    std::vector<std::vector<int>> outcome_labels;
    std::vector<CMatrix> effects;

    CMatrix marginal(int x, int out) const {
        const int total = static_cast<int>(effects.front().rows());
        CMatrix f = CMatrix::Zero(total, total);
        for (std::size_t t = 0; t < effects.size(); ++t) {
            if (outcome_labels[t][static_cast<std::size_t>(x)] == out) f += effects[t];
        }
        return f;
    }
};

/// Universal lower bound on the n-copy critical visibility of any m
/// measurements in dimension d, from optimal n -> m cloning:
/// n (d + m) / (m (d + n)).
inline Visibility clone_bound(int d, int m, int n) {
    if (d < 2 || n < 1 || n > m) {
        throw std::invalid_argument("clone_bound: need d >= 2 and 1 <= n <= m");
    }
    return Visibility(static_cast<double>(n * (d + m)) / static_cast<double>(m * (d + n)));
}

namespace detail {

inline int pow_int(int base, int exp) {
    int out = 1;
    for (int i = 0; i < exp; ++i) out *= base;
    return out;
}

inline void check_copy_dims(int d, int n, int guard) {
    if (n < 1) throw std::invalid_argument("n_copies must be >= 1");
    if (pow_int(d, n) > guard) {
        throw std::invalid_argument("d^n = " + std::to_string(pow_int(d, n)) +
                                    " exceeds the dimension guard " + std::to_string(guard));
    }
}

/// sum over tensor slots of 1 x ... x B_k x ... x 1.
inline CMatrix slot_sum(const CMatrix& b, int n, int d) {
    const int total = pow_int(d, n);
    CMatrix out = CMatrix::Zero(total, total);
    for (int j = 0; j < n; ++j) out += embed_at_slot(b, j, n, d);
    return out;
}

/// Multisets {k_1 <= ... <= k_t} over basis indices, 2 <= t <= n.
inline std::vector<std::vector<int>> degree_monomials(int basis_size, int n) {
    std::vector<std::vector<int>> monomials;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start, int remaining) -> void {
        if (cur.size() >= 2) monomials.push_back(cur);
        if (remaining == 0) return;
        for (int k = start; k < basis_size; ++k) {
            cur.push_back(k);
            self(self, k, remaining - 1);
            cur.pop_back();
        }
    };
    rec(rec, 0, n);
    return monomials;
}

/// Coefficient operator of the monomial prod_k r_k in Tr[F rho^xn]: the sum
/// over all distinct slot assignments realizing the multiset, identity in the
/// unassigned slots.
inline CMatrix monomial_placement_sum(const std::vector<int>& monomial, const OperatorBasis& basis,
                                      int n, int d) {
    std::vector<int> arrangement(static_cast<std::size_t>(n), -1);  // -1 = identity slot
    for (std::size_t i = 0; i < monomial.size(); ++i) {
        arrangement[i] = monomial[i];
    }
    std::sort(arrangement.begin(), arrangement.end());
    const int total = pow_int(d, n);
    CMatrix sum = CMatrix::Zero(total, total);
    do {
        CMatrix term = CMatrix::Identity(1, 1);
        for (int j = 0; j < n; ++j) {
            const int k = arrangement[static_cast<std::size_t>(j)];
            term = kron(term, k < 0 ? identity_c(d) : basis.element(k));
        }
        sum += term;
    } while (std::next_permutation(arrangement.begin(), arrangement.end()));
    return sum;
}

struct MultiCopyModel {
    ParentVars parent;
    std::vector<CMatrix> slot_sums;                  // per basis element
    std::vector<CMatrix> placement_sums;             // per degree >= 2 monomial
    std::vector<std::vector<int>> monomials;
};

/// Declares the d^n-dimensional parent variables and adds the constraints
/// shared by membership and visibility: completeness and the vanishing of
/// every degree >= 2 Bloch monomial of Tr[F_{x,a} rho^xn].
inline MultiCopyModel add_multicopy_model(conic::Problem& p, const Assemblage& a, int n,
                                          const OperatorBasis& basis, bool real_vars) {
    const int d = a.dim();
    const int total = pow_int(d, n);
    MultiCopyModel model;
    model.parent = add_parent_vars(p, "G", total, a.outcome_counts(), real_vars, std::nullopt);
    for (int k = 0; k < basis.size(); ++k) {
        model.slot_sums.push_back(slot_sum(basis.element(k), n, d));
    }
    model.monomials = degree_monomials(basis.size(), n);
    for (const auto& mono : model.monomials) {
        model.placement_sums.push_back(monomial_placement_sum(mono, basis, n, d));
    }

    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            for (std::size_t mi = 0; mi < model.monomials.size(); ++mi) {
                conic::LinearExpr row;
                for (std::size_t t = 0; t < model.parent.labels.size(); ++t) {
                    if (model.parent.labels[t][static_cast<std::size_t>(x)] == out) {
                        row.add_matrix(model.parent.vars[t], model.placement_sums[mi]);
                    }
                }
                p.add_equality(std::move(row), 0.0);
            }
        }
    }
    return model;
}

/// The unique single-copy operator with the same trace and Bloch
/// coefficients as the marginal F_{x,a}; equals the simulated effect once the
/// degree >= 2 monomials vanish.
inline conic::OperatorExpr effective_effect(const MultiCopyModel& model, const OperatorBasis& basis,
                                            const Assemblage& a, int n, int x, int out) {
    const int d = a.dim();
    const int total = pow_int(d, n);
    const double dn = static_cast<double>(pow_int(d, n));
    const double dn1 = static_cast<double>(pow_int(d, n - 1));
    conic::OperatorExpr eff(d);
    for (std::size_t t = 0; t < model.parent.labels.size(); ++t) {
        if (model.parent.labels[t][static_cast<std::size_t>(x)] != out) continue;
        const int var = model.parent.vars[t];
        eff.add_traced_term(var, identity_c(d) / dn, identity_c(total));
        for (int k = 0; k < basis.size(); ++k) {
            const double b_norm = (basis.element(k) * basis.element(k)).trace().real();
            eff.add_traced_term(var, basis.element(k) / (b_norm * dn1), model.slot_sums[k]);
        }
    }
    return eff;
}

inline MultiCopyParent extract_multicopy(const conic::Problem& p, const conic::Solution& sol,
                                         const MultiCopyModel& model, const Assemblage& a, int n) {
    MultiCopyParent parent;
    parent.n_copies = n;
    parent.copy_dim = a.dim();
    parent.outcome_labels = model.parent.labels;
    for (int v : model.parent.vars) {
        parent.effects.push_back(sol.matrix(p.mat_vars()[static_cast<std::size_t>(v)].label));
    }
    return parent;
}

}  // namespace detail

inline constexpr int kDefaultCopyDimGuard = 16;

/// n-copy joint measurability of A: is there one POVM on n copies whose
/// statistics reproduce every measurement on every state? Decided through the
/// norm distance between A and the parent's effective single-copy assemblage,
/// with the degree >= 2 Bloch monomials pinned to zero.
inline std::pair<bool, std::optional<MultiCopyParent>> ncopy_feasible(
    const Assemblage& a, int n, double tol = conic::kDefaultSolveTol,
    int dim_guard = kDefaultCopyDimGuard) {
    detail::check_copy_dims(a.dim(), n, dim_guard);
    const OperatorBasis basis(a.dim());
    const bool real_vars = assemblage_is_real(a);

    conic::Problem p;
    const auto model = detail::add_multicopy_model(p, a, n, basis, real_vars);
    conic::LinearExpr objective;
    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            conic::OperatorExpr gap = detail::effective_effect(model, basis, a, n, x, out);
            gap.negate();
            gap.add_constant(a.effect(x, out));
            const int lambda = operator_interval_constraint(
                p, gap, "lam_" + std::to_string(x) + "_" + std::to_string(out));
            objective.add_scalar(lambda, 1.0);
        }
    }
    p.set_objective(objective);

    const conic::Solution sol = conic::solve(p, tol);
    if (!sol.optimal()) {
        throw conic::inconclusive_error("ncopy_feasible: solver returned " +
                                        std::string(conic::status_name(sol.status)));
    }
    if (sol.objective_value > conic::kMembershipMargin) return {false, std::nullopt};
    return {true, detail::extract_multicopy(p, sol, model, a, n)};
}

/// Largest eta with depolarize(A, eta) n-copy jointly measurable.
inline Visibility ncopy_visibility(const Assemblage& a, int n,
                                   double tol = conic::kDefaultSolveTol,
                                   int dim_guard = kDefaultCopyDimGuard) {
    detail::check_copy_dims(a.dim(), n, dim_guard);
    const OperatorBasis basis(a.dim());
    const bool real_vars = assemblage_is_real(a);

    conic::Problem p;
    const int eta = p.add_scalar_var("eta", 0.0);
    p.add_scalar_upper_bound(eta, 1.0);
    const auto model = detail::add_multicopy_model(p, a, n, basis, real_vars);

    // Depolarization keeps traces and scales Bloch parts by eta, so the
    // effective effect must match Tr[M] 1/d + eta (M - Tr[M] 1/d).
    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            conic::OperatorExpr eq = detail::effective_effect(model, basis, a, n, x, out);
            eq.add(detail::noisy_effect_expr(a, x, out, eta).negate());
            add_operator_equality(p, eq);
        }
    }
    conic::LinearExpr objective;
    objective.add_scalar(eta, -1.0);
    p.set_objective(objective);

    const conic::Solution sol = conic::solve(p, tol);
    if (!sol.optimal()) {
        throw conic::inconclusive_error("ncopy_visibility: solver returned " +
                                        std::string(conic::status_name(sol.status)));
    }
    return Visibility(std::clamp(sol.scalar("eta"), 0.0, 1.0));
}

/// Statistical replay of the matching condition on random states: the
/// largest deviation |Tr[M_{a|x} rho] - Tr[F_{x,a} rho^xn]| over `trials`
/// seeded Ginibre states.
inline double verify_multicopy_statistics(const Assemblage& a, const MultiCopyParent& parent,
                                          int trials, std::uint64_t seed = 20240901) {
    const int d = a.dim();
    if (parent.copy_dim != d ||
        static_cast<int>(parent.outcome_labels.front().size()) != a.settings()) {
        throw std::invalid_argument("verify_multicopy_statistics: shape mismatch");
    }
    detail::GaussianSampler sampler(seed);
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const CMatrix rho = detail::random_state(d, sampler);
        CMatrix rho_n = CMatrix::Identity(1, 1);
        for (int j = 0; j < parent.n_copies; ++j) rho_n = kron(rho_n, rho);
        for (int x = 0; x < a.settings(); ++x) {
            for (int out = 0; out < a.outcomes(x); ++out) {
                const double lhs = (a.effect(x, out) * rho).trace().real();
                const double rhs = (parent.marginal(x, out) * rho_n).trace().real();
                worst = std::max(worst, std::abs(lhs - rhs));
            }
        }
    }
    return worst;
}

}  // namespace incompat
