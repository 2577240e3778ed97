#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "incompat/assemblage.hpp"
#include "incompat/jm.hpp"
#include "incompat/partitions.hpp"

namespace incompat {

/// Convex decomposition over partition collections: the target assemblage is
/// reconstructed as a sum of per-partition terms, each carrying a weight and
/// subnormalized block parents (block parent effects sum to weight * 1).
struct ConvexDecomposition {
    struct Term {
        PartitionCollection partition;
        double weight = 0.0;
        std::vector<ParentPovm> block_parents;  // one per block, subnormalized
    };
    std::vector<Term> terms;
};

struct DecompositionResidual {
    double reconstruction = 0.0;   // target vs weighted reconstruction
    double completeness = 0.0;     // block parent sums vs weight * 1
    double weights = 0.0;          // |sum of weights - 1|
    double max() const { return std::max({reconstruction, completeness, weights}); }
};

/// Residuals of a decomposition against its target assemblage.
inline DecompositionResidual verify_decomposition(const Assemblage& a,
                                                  const ConvexDecomposition& dec) {
    const int d = a.dim();
    DecompositionResidual res;
    double weight_sum = 0.0;
    for (const auto& term : dec.terms) {
        weight_sum += term.weight;
        for (const auto& parent : term.block_parents) {
            CMatrix sum = CMatrix::Zero(d, d);
            for (const auto& e : parent.effects) sum += e;
            res.completeness = std::max(
                res.completeness, operator_norm(sum - term.weight * identity_c(d)));
        }
    }
    res.weights = std::abs(weight_sum - 1.0);
    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            CMatrix recon = CMatrix::Zero(d, d);
            for (const auto& term : dec.terms) {
                const int j = term.partition.block_of(x);
                const auto& parent = term.block_parents[static_cast<std::size_t>(j)];
                const auto pos_it =
                    std::find(parent.settings.begin(), parent.settings.end(), x);
                const auto pos = pos_it - parent.settings.begin();
                for (std::size_t t = 0; t < parent.effects.size(); ++t) {
                    if (parent.outcome_labels[t][static_cast<std::size_t>(pos)] == out) {
                        recon += parent.effects[t];
                    }
                }
            }
            res.reconstruction =
                std::max(res.reconstruction, operator_norm(recon - a.effect(x, out)));
        }
    }
    return res;
}

/// Deterministic n-simulability: some partition into at most n blocks has
/// every block jointly measurable. Returns the first witnessing partition in
/// enumeration order.
inline std::pair<bool, std::optional<PartitionCollection>> sim_det_feasible(
    const Assemblage& a, int n, double tol = conic::kDefaultSolveTol) {
    bool any_inconclusive = false;
    for (const auto& partition : enumerate_partitions(a.settings(), n)) {
        bool all_blocks_ok = true;
        for (const auto& block : partition.blocks) {
            if (block.size() == 1) continue;  // a measurement simulates itself
            try {
                if (!jm_feasible(a, block, tol).first) {
                    all_blocks_ok = false;
                    break;
                }
            } catch (const conic::inconclusive_error&) {
                any_inconclusive = true;
                all_blocks_ok = false;
                break;
            }
        }
        if (all_blocks_ok) return {true, partition};
    }
    if (any_inconclusive) {
        throw conic::inconclusive_error("sim_det_feasible: a block solve was inconclusive");
    }
    return {false, std::nullopt};
}

/// max over partitions of (min over blocks of the blockwise threshold). Exact
/// for depolarizing noise, which acts on each block independently.
inline std::pair<Visibility, PartitionCollection> sim_det_visibility_with_witness(
    const Assemblage& a, int n, double tol = conic::kDefaultSolveTol) {
    std::map<std::vector<int>, double> cache;
    double best = -1.0;
    PartitionCollection best_partition;
    for (const auto& partition : enumerate_partitions(a.settings(), n)) {
        double worst_block = 1.0;
        for (const auto& block : partition.blocks) {
            if (block.size() == 1) continue;
            auto it = cache.find(block);
            if (it == cache.end()) {
                it = cache.emplace(block, jm_visibility(a, block, tol).eta()).first;
            }
            worst_block = std::min(worst_block, it->second);
        }
        if (worst_block > best) {
            best = worst_block;
            best_partition = partition;
        }
    }
    return {Visibility(best), best_partition};
}

inline Visibility sim_det_visibility(const Assemblage& a, int n,
                                     double tol = conic::kDefaultSolveTol) {
    return sim_det_visibility_with_witness(a, n, tol).first;
}

namespace detail {

struct NwiseVars {
    std::vector<int> weight_vars;                // one per partition
    std::vector<std::vector<ParentVars>> parents;  // [partition][block]
};

/// Declares, for every partition, a weight variable and subnormalized block
/// parents whose completeness is tied to the weight.
inline NwiseVars add_nwise_vars(conic::Problem& p, const Assemblage& a,
                                const std::vector<PartitionCollection>& partitions,
                                bool real_vars) {
    NwiseVars vars;
    conic::LinearExpr weight_sum;
    for (std::size_t i = 0; i < partitions.size(); ++i) {
        const int w = p.add_scalar_var("w_" + std::to_string(i), 0.0);
        vars.weight_vars.push_back(w);
        weight_sum.add_scalar(w, 1.0);
        vars.parents.emplace_back();
        for (std::size_t j = 0; j < partitions[i].blocks.size(); ++j) {
            const auto& block = partitions[i].blocks[j];
            std::vector<int> counts;
            counts.reserve(block.size());
            for (int x : block) counts.push_back(a.outcomes(x));
            vars.parents.back().push_back(
                add_parent_vars(p, "J_" + std::to_string(i) + "_" + std::to_string(j), a.dim(),
                                counts, real_vars, w));
        }
    }
    p.add_equality(std::move(weight_sum), 1.0);
    return vars;
}

/// sum over partitions of the block marginal reproducing effect (x, out).
inline conic::OperatorExpr nwise_reconstruction(const NwiseVars& vars,
                                                const std::vector<PartitionCollection>& partitions,
                                                int dim, int x, int out) {
    conic::OperatorExpr recon(dim);
    for (std::size_t i = 0; i < partitions.size(); ++i) {
        const int j = partitions[i].block_of(x);
        const auto& block = partitions[i].blocks[static_cast<std::size_t>(j)];
        const int pos = static_cast<int>(
            std::find(block.begin(), block.end(), x) - block.begin());
        recon.add(parent_marginal(vars.parents[i][static_cast<std::size_t>(j)], dim, pos, out));
    }
    return recon;
}

inline ConvexDecomposition extract_decomposition(
    const conic::Problem& p, const conic::Solution& sol, const Assemblage& a,
    const std::vector<PartitionCollection>& partitions, const NwiseVars& vars) {
    ConvexDecomposition dec;
    for (std::size_t i = 0; i < partitions.size(); ++i) {
        ConvexDecomposition::Term term;
        term.partition = partitions[i];
        term.weight = sol.scalar(
            p.scalar_vars()[static_cast<std::size_t>(vars.weight_vars[i])].label);
        for (std::size_t j = 0; j < partitions[i].blocks.size(); ++j) {
            term.block_parents.push_back(extract_parent(
                p, sol, vars.parents[i][j], partitions[i].blocks[j], a.dim()));
        }
        dec.terms.push_back(std::move(term));
    }
    return dec;
}

}  // namespace detail

/// n-wise compatibility over an explicit list of partition collections.
/// Solves one norm-distance SDP with all per-partition terms at once and
/// applies the membership margin.
inline std::pair<bool, std::optional<ConvexDecomposition>> nwise_feasible_over(
    const Assemblage& a, const std::vector<PartitionCollection>& partitions,
    double tol = conic::kDefaultSolveTol) {
    const bool real_vars = assemblage_is_real(a);
    conic::Problem p;
    const auto vars = detail::add_nwise_vars(p, a, partitions, real_vars);

    conic::LinearExpr objective;
    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            conic::OperatorExpr gap =
                detail::nwise_reconstruction(vars, partitions, a.dim(), x, out);
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
        throw conic::inconclusive_error("nwise_feasible: solver returned " +
                                        std::string(conic::status_name(sol.status)));
    }
    if (sol.objective_value > conic::kMembershipMargin) return {false, std::nullopt};
    return {true, detail::extract_decomposition(p, sol, a, partitions, vars)};
}

inline std::pair<bool, std::optional<ConvexDecomposition>> nwise_feasible(
    const Assemblage& a, int n, double tol = conic::kDefaultSolveTol) {
    return nwise_feasible_over(a, enumerate_partitions(a.settings(), n), tol);
}

/// Largest eta with depolarize(A, eta) n-wise compatible; a single SDP
/// maximizing eta over all decompositions at once.
inline Visibility nwise_visibility_over(const Assemblage& a,
                                        const std::vector<PartitionCollection>& partitions,
                                        double tol = conic::kDefaultSolveTol) {
    const bool real_vars = assemblage_is_real(a);
    conic::Problem p;
    const int eta = p.add_scalar_var("eta", 0.0);
    p.add_scalar_upper_bound(eta, 1.0);
    const auto vars = detail::add_nwise_vars(p, a, partitions, real_vars);

    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            conic::OperatorExpr eq =
                detail::nwise_reconstruction(vars, partitions, a.dim(), x, out);
            eq.add(detail::noisy_effect_expr(a, x, out, eta).negate());
            add_operator_equality(p, eq);
        }
    }

    conic::LinearExpr objective;
    objective.add_scalar(eta, -1.0);
    p.set_objective(objective);

    const conic::Solution sol = conic::solve(p, tol);
    if (!sol.optimal()) {
        throw conic::inconclusive_error("nwise_visibility: solver returned " +
                                        std::string(conic::status_name(sol.status)));
    }
    return Visibility(std::clamp(sol.scalar("eta"), 0.0, 1.0));
}

inline Visibility nwise_visibility(const Assemblage& a, int n,
                                   double tol = conic::kDefaultSolveTol) {
    return nwise_visibility_over(a, enumerate_partitions(a.settings(), n), tol);
}

}  // namespace incompat
