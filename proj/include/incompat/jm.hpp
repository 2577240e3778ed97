#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "incompat/assemblage.hpp"
#include "incompat/conic/problem.hpp"
#include "incompat/conic/solve.hpp"

namespace incompat {

/// True when every effect matrix is real, in which case every SDP built from
/// the assemblage admits a real optimal solution and the solver can stay on
/// real symmetric blocks.
inline bool assemblage_is_real(const Assemblage& a) {
    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            if (a.effect(x, out).imag().cwiseAbs().maxCoeff() > 1e-14) return false;
        }
    }
    return true;
}

/// Parent POVM in canonical vector-outcome form: one outcome channel per
/// covered setting, outcome labels are tuples with one entry per setting.
struct ParentPovm {
    std::vector<int> settings;                   // which settings of the assemblage are covered
    std::vector<std::vector<int>> outcome_labels;  // tuples, one entry per covered setting
    std::vector<CMatrix> effects;
    int dim = 0;
};

namespace detail {

/// Odometer over outcome tuples (a_1, ..., a_r) with a_i < counts[i],
/// last index fastest; the enumeration order fixes the outcome labels.
inline std::vector<std::vector<int>> outcome_tuples(const std::vector<int>& counts) {
    std::vector<std::vector<int>> tuples;
    std::vector<int> cur(counts.size(), 0);
    while (true) {
        tuples.push_back(cur);
        int i = static_cast<int>(counts.size()) - 1;
        for (; i >= 0; --i) {
            if (++cur[static_cast<std::size_t>(i)] < counts[static_cast<std::size_t>(i)]) break;
            cur[static_cast<std::size_t>(i)] = 0;
        }
        if (i < 0) break;
    }
    return tuples;
}

/// Declares parent-POVM variables (one PSD matrix per outcome tuple) and the
/// completeness constraint sum = scale, where scale is either the constant 1
/// or a scalar weight variable.
struct ParentVars {
    std::vector<int> vars;
    std::vector<std::vector<int>> labels;
};

inline ParentVars add_parent_vars(conic::Problem& p, const std::string& prefix, int dim,
                                  const std::vector<int>& outcome_counts, bool real_vars,
                                  std::optional<int> weight_var) {
    ParentVars pv;
    pv.labels = outcome_tuples(outcome_counts);
    conic::OperatorExpr completeness(dim);
    for (std::size_t t = 0; t < pv.labels.size(); ++t) {
        std::string label = prefix;
        for (int a : pv.labels[t]) label += "_" + std::to_string(a);
        const int v = p.add_psd_var(label, dim, real_vars);
        pv.vars.push_back(v);
        completeness.add_matrix_var(v, 1.0);
    }
    if (weight_var) {
        completeness.add_scalar_var(*weight_var, -identity_c(dim));
    } else {
        completeness.add_constant(-identity_c(dim));
    }
    add_operator_equality(p, completeness);
    return pv;
}

/// Marginal of the parent over all tuple positions except `pos`, at value `a`.
inline conic::OperatorExpr parent_marginal(const ParentVars& pv, int dim, int pos, int a) {
    conic::OperatorExpr marg(dim);
    for (std::size_t t = 0; t < pv.labels.size(); ++t) {
        if (pv.labels[t][static_cast<std::size_t>(pos)] == a) {
            marg.add_matrix_var(pv.vars[t], 1.0);
        }
    }
    return marg;
}

/// Effect of depolarize(A, eta)(x, a) as an affine expression in a scalar
/// visibility variable: Tr[M] 1/d + eta (M - Tr[M] 1/d).
inline conic::OperatorExpr noisy_effect_expr(const Assemblage& a, int x, int out, int eta_var) {
    const int d = a.dim();
    const CMatrix m = a.effect(x, out);
    const CMatrix trace_part = m.trace().real() / d * identity_c(d);
    conic::OperatorExpr e(d);
    e.add_constant(trace_part);
    e.add_scalar_var(eta_var, m - trace_part);
    return e;
}

inline std::vector<int> full_subset(const Assemblage& a) {
    std::vector<int> s(static_cast<std::size_t>(a.settings()));
    for (int x = 0; x < a.settings(); ++x) s[static_cast<std::size_t>(x)] = x;
    return s;
}

inline void check_subset(const Assemblage& a, const std::vector<int>& subset) {
    if (subset.empty()) throw std::invalid_argument("subset must be nonempty");
    for (int x : subset) {
        if (x < 0 || x >= a.settings()) throw std::invalid_argument("subset index out of range");
    }
}

inline ParentPovm extract_parent(const conic::Problem& p, const conic::Solution& sol,
                                 const ParentVars& pv, const std::vector<int>& subset, int dim) {
    ParentPovm parent;
    parent.settings = subset;
    parent.outcome_labels = pv.labels;
    parent.dim = dim;
    for (std::size_t t = 0; t < pv.vars.size(); ++t) {
        parent.effects.push_back(
            sol.matrix(p.mat_vars()[static_cast<std::size_t>(pv.vars[t])].label));
    }
    return parent;
}

}  // namespace detail

/// The norm-distance SDP behind jm_feasible, exposed so the problem can be
/// dumped for cross-checking against external solvers.
struct JmDistanceProblem {
    conic::Problem problem;
    detail::ParentVars parent_vars;
};

inline JmDistanceProblem build_jm_distance_problem(const Assemblage& a,
                                                   const std::vector<int>& subset) {
    detail::check_subset(a, subset);
    const int d = a.dim();
    const bool real_vars = assemblage_is_real(a);

    JmDistanceProblem jp;
    std::vector<int> counts;
    counts.reserve(subset.size());
    for (int x : subset) counts.push_back(a.outcomes(x));
    jp.parent_vars = detail::add_parent_vars(jp.problem, "G", d, counts, real_vars, std::nullopt);

    conic::LinearExpr objective;
    for (std::size_t pos = 0; pos < subset.size(); ++pos) {
        const int x = subset[pos];
        for (int out = 0; out < a.outcomes(x); ++out) {
            conic::OperatorExpr gap =
                detail::parent_marginal(jp.parent_vars, d, static_cast<int>(pos), out);
            gap.negate();
            gap.add_constant(a.effect(x, out));
            const int lambda = operator_interval_constraint(
                jp.problem, gap, "lam_" + std::to_string(x) + "_" + std::to_string(out));
            objective.add_scalar(lambda, 1.0);
        }
    }
    jp.problem.set_objective(objective);
    return jp;
}

/// Joint-measurability test for the sub-assemblage picked out by `subset`
/// (0-based setting indices). Solves the norm-distance SDP to the set of
/// marginals of a parent POVM and applies the membership margin; on success
/// the witness parent is returned.
///
/// Throws inconclusive_error when the solver cannot certify either way.
inline std::pair<bool, std::optional<ParentPovm>> jm_feasible(const Assemblage& a,
                                                              const std::vector<int>& subset,
                                                              double tol = conic::kDefaultSolveTol) {
    JmDistanceProblem jp = build_jm_distance_problem(a, subset);
    const conic::Solution sol = conic::solve(jp.problem, tol);
    if (!sol.optimal()) {
        throw conic::inconclusive_error("jm_feasible: solver returned " +
                                        std::string(conic::status_name(sol.status)));
    }
    if (sol.objective_value > conic::kMembershipMargin) return {false, std::nullopt};
    return {true, detail::extract_parent(jp.problem, sol, jp.parent_vars, subset, a.dim())};
}

inline std::pair<bool, std::optional<ParentPovm>> jm_feasible(const Assemblage& a) {
    return jm_feasible(a, detail::full_subset(a));
}

/// Largest eta such that depolarize(A, eta), restricted to `subset`, stays
/// jointly measurable. One SDP maximizing eta; the constraints are affine in
/// eta under the depolarizing noise model.
inline Visibility jm_visibility(const Assemblage& a, const std::vector<int>& subset,
                                double tol = conic::kDefaultSolveTol) {
    detail::check_subset(a, subset);
    const int d = a.dim();
    const bool real_vars = assemblage_is_real(a);

    conic::Problem p;
    const int eta = p.add_scalar_var("eta", 0.0);
    p.add_scalar_upper_bound(eta, 1.0);
    std::vector<int> counts;
    counts.reserve(subset.size());
    for (int x : subset) counts.push_back(a.outcomes(x));
    const auto pv = detail::add_parent_vars(p, "G", d, counts, real_vars, std::nullopt);

    // marginal(G) - noisy effect = 0 for every covered (x, a).
    for (std::size_t pos = 0; pos < subset.size(); ++pos) {
        const int x = subset[pos];
        for (int out = 0; out < a.outcomes(x); ++out) {
            conic::OperatorExpr eq = detail::parent_marginal(pv, d, static_cast<int>(pos), out);
            eq.add(detail::noisy_effect_expr(a, x, out, eta).negate());
            add_operator_equality(p, eq);
        }
    }

    conic::LinearExpr objective;
    objective.add_scalar(eta, -1.0);
    p.set_objective(objective);

    const conic::Solution sol = conic::solve(p, tol);
    if (!sol.optimal()) {
        throw conic::inconclusive_error("jm_visibility: solver returned " +
                                        std::string(conic::status_name(sol.status)));
    }
    return Visibility(std::clamp(sol.scalar("eta"), 0.0, 1.0));
}

inline Visibility jm_visibility(const Assemblage& a) {
    return jm_visibility(a, detail::full_subset(a));
}

/// Max operator-norm residual between the parent's marginals and the effects
/// of A restricted to the parent's settings.
inline double verify_parent(const Assemblage& a, const std::vector<int>& subset,
                            const ParentPovm& parent) {
    detail::check_subset(a, subset);
    if (subset != parent.settings) throw std::invalid_argument("verify_parent: subset mismatch");
    const int d = a.dim();
    if (parent.dim != d) throw std::invalid_argument("verify_parent: dimension mismatch");
    double worst = 0.0;
    for (std::size_t pos = 0; pos < subset.size(); ++pos) {
        const int x = subset[pos];
        for (int out = 0; out < a.outcomes(x); ++out) {
            CMatrix marg = CMatrix::Zero(d, d);
            for (std::size_t t = 0; t < parent.effects.size(); ++t) {
                if (parent.outcome_labels[t][pos] == out) marg += parent.effects[t];
            }
            worst = std::max(worst, operator_norm(marg - a.effect(x, out)));
        }
    }
    return worst;
}

}  // namespace incompat
