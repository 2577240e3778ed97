#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "incompat/conic/ipm.hpp"
#include "incompat/conic/problem.hpp"

namespace incompat::conic {

struct SolveOptions {
    /// Route real-data Hermitian variables through the 2d x 2d embedding even
    /// when a plain real symmetric block would do. Used by tests to compare
    /// the two routes.
    bool force_embedding = false;
    int max_iter = 120;
};

namespace detail {

/// Pairing matrix for the real 2d x 2d embedding of a Hermitian variable:
/// phi(P)/2 with phi(P) = [[Re P, -Im P], [Im P, Re P]], so that
/// <phi(P)/2, phi(H)> = Tr[P H].
inline Eigen::MatrixXd embed_pairing(const CMatrix& p) {
    const int d = static_cast<int>(p.rows());
    Eigen::MatrixXd out(2 * d, 2 * d);
    out.topLeftCorner(d, d) = p.real();
    out.bottomRightCorner(d, d) = p.real();
    out.topRightCorner(d, d) = -p.imag();
    out.bottomLeftCorner(d, d) = p.imag();
    return 0.25 * (out + out.transpose());
}

/// Merges duplicate per-block terms in a lowered row. The IPM treats each
/// (row, block) coefficient as one matrix, so rows assembled from several
/// pairings on the same variable must be aggregated first.
inline void merge_terms(std::vector<BlockProblem::Term>& terms) {
    std::vector<BlockProblem::Term> merged;
    for (auto& t : terms) {
        bool found = false;
        for (auto& m : merged) {
            if (m.block == t.block) {
                m.coeff += t.coeff;
                found = true;
                break;
            }
        }
        if (!found) merged.push_back(std::move(t));
    }
    terms = std::move(merged);
}

struct Lowering {
    // Matrix variable: block index, or -1 when unused; embedded flag.
    struct MatSlot {
        int block = -1;
        bool embedded = false;
    };
    // Scalar variable: one block (shifted) or a pair (free split).
    struct ScalarSlot {
        int pos_block = -1;
        int neg_block = -1;  // >= 0 only for free scalars
        double shift = 0.0;
    };
    std::vector<MatSlot> mats;
    std::vector<ScalarSlot> scalars;
};

inline double eval_expr(const LinearExpr& e, const Solution& sol, const Problem& p) {
    double v = e.constant;
    for (const auto& t : e.mat_terms) {
        const auto& x = sol.matrix(p.mat_vars()[static_cast<std::size_t>(t.var)].label);
        v += (t.pairing.adjoint() * x).trace().real();
    }
    for (const auto& t : e.scalar_terms) {
        v += t.coeff * sol.scalar(p.scalar_vars()[static_cast<std::size_t>(t.var)].label);
    }
    return v;
}

}  // namespace detail

/// Solve a ConicProblem. Complex Hermitian variables whose pairing data is
/// genuinely complex are embedded as real symmetric 2d x 2d blocks; variables
/// with all-real data stay d x d. `Inaccurate` means the answer cannot be
/// trusted either way and callers must treat it as inconclusive.
inline Solution solve(const Problem& prob, double tol = kDefaultSolveTol,
                      const SolveOptions& options = {}) {
    if (!(tol > 0)) throw std::invalid_argument("solve: tol must be positive");

    const auto& mvars = prob.mat_vars();
    const auto& svars = prob.scalar_vars();

    // Variables never referenced by a constraint or the objective are left
    // out of the cone and reported as zero.
    std::vector<bool> mat_used(mvars.size(), false);
    std::vector<bool> scalar_used(svars.size(), false);
    auto scan = [&](const LinearExpr& e) {
        for (const auto& t : e.mat_terms) mat_used[static_cast<std::size_t>(t.var)] = true;
        for (const auto& t : e.scalar_terms) scalar_used[static_cast<std::size_t>(t.var)] = true;
    };
    for (const auto& c : prob.constraints()) scan(c.lhs);
    scan(prob.objective());

    detail::Lowering low;
    low.mats.resize(mvars.size());
    low.scalars.resize(svars.size());
    detail::BlockProblem bp;

    for (std::size_t v = 0; v < mvars.size(); ++v) {
        if (!mat_used[v]) continue;
        const bool emb = options.force_embedding || !mvars[v].real_var;
        low.mats[v].embedded = emb;
        low.mats[v].block = static_cast<int>(bp.block_dims.size());
        bp.block_dims.push_back(emb ? 2 * mvars[v].dim : mvars[v].dim);
    }
    for (std::size_t v = 0; v < svars.size(); ++v) {
        if (!scalar_used[v]) continue;
        auto& slot = low.scalars[v];
        slot.pos_block = static_cast<int>(bp.block_dims.size());
        bp.block_dims.push_back(1);
        if (svars[v].lower == kFreeScalar) {
            slot.neg_block = static_cast<int>(bp.block_dims.size());
            bp.block_dims.push_back(1);
        } else {
            slot.shift = svars[v].lower;
        }
    }

    auto lower_expr = [&](const LinearExpr& e, std::vector<detail::BlockProblem::Term>& terms,
                          double& constant) {
        constant += e.constant;
        for (const auto& t : e.mat_terms) {
            const auto& slot = low.mats[static_cast<std::size_t>(t.var)];
            if (slot.embedded) {
                terms.push_back({slot.block, detail::embed_pairing(t.pairing)});
            } else {
                Eigen::MatrixXd re = t.pairing.real();
                terms.push_back({slot.block, 0.5 * (re + re.transpose())});
            }
        }
        for (const auto& t : e.scalar_terms) {
            const auto& slot = low.scalars[static_cast<std::size_t>(t.var)];
            Eigen::MatrixXd one(1, 1);
            one(0, 0) = t.coeff;
            terms.push_back({slot.pos_block, one});
            if (slot.neg_block >= 0) {
                Eigen::MatrixXd neg(1, 1);
                neg(0, 0) = -t.coeff;
                terms.push_back({slot.neg_block, neg});
            } else {
                constant += t.coeff * slot.shift;
            }
        }
    };

    for (const auto& c : prob.constraints()) {
        detail::BlockProblem::Row row;
        double constant = 0.0;
        lower_expr(c.lhs, row.terms, constant);
        detail::merge_terms(row.terms);
        row.rhs = c.rhs - constant;
        bp.rows.push_back(std::move(row));
    }
    lower_expr(prob.objective(), bp.objective, bp.objective_constant);
    detail::merge_terms(bp.objective);

    detail::IpmOptions ipm_opt;
    ipm_opt.tol = tol;
    ipm_opt.max_iter = options.max_iter;
    const detail::IpmResult ipm = detail::ipm_solve(bp, ipm_opt);

    Solution sol;
    sol.iterations = ipm.iterations;
    switch (ipm.status) {
        case detail::IpmStatus::Optimal: sol.status = Status::Optimal; break;
        case detail::IpmStatus::Infeasible: sol.status = Status::Infeasible; break;
        case detail::IpmStatus::Unbounded: sol.status = Status::Unbounded; break;
        case detail::IpmStatus::Inaccurate: sol.status = Status::Inaccurate; break;
    }
    if (sol.status == Status::Infeasible || sol.status == Status::Unbounded) {
        return sol;
    }

    // Extract witness values back into complex Hermitian form. Embedded
    // blocks are structure-averaged first so the recovered matrix is exactly
    // Hermitian (and PSD whenever the real block was).
    for (std::size_t v = 0; v < mvars.size(); ++v) {
        const int d = mvars[v].dim;
        const auto& slot = low.mats[v];
        CMatrix h;
        if (slot.block < 0) {
            h = CMatrix::Zero(d, d);
        } else if (slot.embedded) {
            const Eigen::MatrixXd& yb = ipm.x[static_cast<std::size_t>(slot.block)];
            const Eigen::MatrixXd re =
                0.5 * (yb.topLeftCorner(d, d) + yb.bottomRightCorner(d, d));
            const Eigen::MatrixXd im =
                0.5 * (yb.bottomLeftCorner(d, d) - yb.topRightCorner(d, d));
            h = re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
        } else {
            h = ipm.x[static_cast<std::size_t>(slot.block)].cast<Complex>();
        }
        sol.matrix_values[mvars[v].label] = hermitian_part(h);
    }
    for (std::size_t v = 0; v < svars.size(); ++v) {
        const auto& slot = low.scalars[v];
        double val;
        if (slot.pos_block < 0) {
            val = (svars[v].lower == kFreeScalar) ? 0.0 : std::max(0.0, svars[v].lower);
        } else if (slot.neg_block >= 0) {
            val = ipm.x[static_cast<std::size_t>(slot.pos_block)](0, 0) -
                  ipm.x[static_cast<std::size_t>(slot.neg_block)](0, 0);
        } else {
            val = ipm.x[static_cast<std::size_t>(slot.pos_block)](0, 0) + slot.shift;
        }
        sol.scalar_values[svars[v].label] = val;
    }

    sol.objective_value = detail::eval_expr(prob.objective(), sol, prob);

    // Honest residual over the original (complex-form) problem.
    double residual = 0.0;
    for (const auto& c : prob.constraints()) {
        residual = std::max(residual, std::abs(detail::eval_expr(c.lhs, sol, prob) - c.rhs));
    }
    for (std::size_t v = 0; v < mvars.size(); ++v) {
        if (low.mats[v].block < 0) continue;
        residual = std::max(residual, -min_eigenvalue(sol.matrix_values[mvars[v].label]));
    }
    sol.max_residual = residual;
    if (sol.status == Status::Optimal && residual > 1e3 * tol) {
        sol.status = Status::Inaccurate;
    }
    return sol;
}

}  // namespace incompat::conic
