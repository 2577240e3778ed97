#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#ifdef INCOMPAT_IPM_TRACE
#include <cstdio>
#endif

namespace incompat::conic::detail {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// SDP in primal standard form over a product of real symmetric PSD blocks:
///   minimize   sum_b <C_b, X_b>
///   subject to sum_b <A_{i,b}, X_b> = rhs_i,   X_b >= 0.
/// Constraint coefficient matrices are stored sparsely per row.
struct BlockProblem {
    struct Term {
        int block;
        MatrixXd coeff;  // symmetric
    };
    struct Row {
        std::vector<Term> terms;
        double rhs = 0.0;
    };

    std::vector<int> block_dims;
    std::vector<Row> rows;
    std::vector<Term> objective;
    double objective_constant = 0.0;
};

enum class IpmStatus { Optimal, Infeasible, Unbounded, Inaccurate };

struct IpmResult {
    IpmStatus status = IpmStatus::Inaccurate;
    std::vector<MatrixXd> x;
    std::vector<double> y;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double primal_infeas = 0.0;
    double dual_infeas = 0.0;
    double rel_gap = 0.0;
    int iterations = 0;
};

struct IpmOptions {
    double tol = 1e-8;
    int max_iter = 120;
    double step_fraction = 0.98;
};

// svec packing: upper triangle with off-diagonal entries scaled by sqrt(2),
// so that dot(svec(A), svec(B)) = <A, B>.
inline int svec_size(int n) { return n * (n + 1) / 2; }

inline void svec_into(const MatrixXd& a, double* out) {
    const double rt2 = std::sqrt(2.0);
    int k = 0;
    for (int j = 0; j < a.cols(); ++j) {
        for (int i = 0; i <= j; ++i) {
            out[k++] = (i == j) ? a(i, j) : rt2 * a(i, j);
        }
    }
}

/// Rank-filters the equality rows. Returns the kept row indices; sets
/// `inconsistent` when a dropped row contradicts the kept ones (the system
/// A x = b has no solution at all).
inline std::vector<int> independent_rows(const BlockProblem& p, bool& inconsistent) {
    inconsistent = false;
    const int m = static_cast<int>(p.rows.size());
    std::vector<int> offsets(p.block_dims.size() + 1, 0);
    for (std::size_t b = 0; b < p.block_dims.size(); ++b) {
        offsets[b + 1] = offsets[b] + svec_size(p.block_dims[b]);
    }
    const int n_vec = offsets.back();

    MatrixXd at = MatrixXd::Zero(n_vec, m);  // columns are vectorized rows
    std::vector<double> scratch(static_cast<std::size_t>(n_vec));
    for (int i = 0; i < m; ++i) {
        for (const auto& t : p.rows[static_cast<std::size_t>(i)].terms) {
            svec_into(t.coeff, scratch.data());
            const int off = offsets[static_cast<std::size_t>(t.block)];
            for (int k = 0; k < svec_size(p.block_dims[static_cast<std::size_t>(t.block)]); ++k) {
                at(off + k, i) += scratch[static_cast<std::size_t>(k)];
            }
        }
    }

    std::vector<int> kept;
    // Rows that vanish entirely must have (near-)zero right-hand side.
    std::vector<bool> zero_row(static_cast<std::size_t>(m), false);
    for (int i = 0; i < m; ++i) {
        if (at.col(i).cwiseAbs().maxCoeff() < 1e-14) {
            zero_row[static_cast<std::size_t>(i)] = true;
            if (std::abs(p.rows[static_cast<std::size_t>(i)].rhs) > 1e-9) {
                inconsistent = true;
                return kept;
            }
        }
    }

    Eigen::ColPivHouseholderQR<MatrixXd> qr(at);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    const auto& perm = qr.colsPermutation().indices();
    kept.reserve(static_cast<std::size_t>(rank));
    for (int k = 0; k < rank; ++k) kept.push_back(perm(k));
    std::sort(kept.begin(), kept.end());

    if (rank < m) {
        // Check that every dropped row's rhs agrees with its representation
        // in terms of the kept rows.
        const MatrixXd r_full = qr.matrixR();
        const auto r11 = r_full.topLeftCorner(rank, rank).triangularView<Eigen::Upper>();
        VectorXd b_pivot(rank);
        for (int k = 0; k < rank; ++k) {
            b_pivot(k) = p.rows[static_cast<std::size_t>(perm(k))].rhs;
        }
        for (int pos = rank; pos < m; ++pos) {
            const int row_idx = perm(pos);
            if (zero_row[static_cast<std::size_t>(row_idx)]) continue;
            const VectorXd w = r11.solve(r_full.block(0, pos, rank, 1));
            const double predicted = w.dot(b_pivot);
            const double actual = p.rows[static_cast<std::size_t>(row_idx)].rhs;
            if (std::abs(predicted - actual) > 1e-7 * (1.0 + std::abs(actual) + w.cwiseAbs().sum())) {
                inconsistent = true;
                return {};
            }
        }
    }
    return kept;
}

// Largest alpha with Lambda + alpha * Delta >= 0, in the scaled space where
// the current iterate is diag(lambda).
inline double max_step(const VectorXd& lambda, const MatrixXd& delta) {
    const int n = static_cast<int>(lambda.size());
    MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            g(i, j) = delta(i, j) / std::sqrt(lambda(i) * lambda(j));
        }
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (lo >= -1e-12) return std::numeric_limits<double>::infinity();
    return -1.0 / lo;
}

/// Infeasible-start primal-dual interior point method with Nesterov-Todd
/// scaling and a Mehrotra predictor-corrector step.
inline IpmResult ipm_solve(const BlockProblem& prob, const IpmOptions& opt = {}) {
    IpmResult res;

    bool inconsistent = false;
    const std::vector<int> kept = independent_rows(prob, inconsistent);
    if (inconsistent) {
        res.status = IpmStatus::Infeasible;
        return res;
    }

    const int nblk = static_cast<int>(prob.block_dims.size());
    const int m = static_cast<int>(kept.size());
    int total_dim = 0;
    for (int d : prob.block_dims) total_dim += d;

    // Per-block dense objective and constraint touch lists.
    std::vector<MatrixXd> c_blocks(static_cast<std::size_t>(nblk));
    for (int b = 0; b < nblk; ++b) {
        c_blocks[static_cast<std::size_t>(b)] =
            MatrixXd::Zero(prob.block_dims[static_cast<std::size_t>(b)],
                           prob.block_dims[static_cast<std::size_t>(b)]);
    }
    for (const auto& t : prob.objective) c_blocks[static_cast<std::size_t>(t.block)] += t.coeff;

    struct TouchedTerm {
        int row;  // local (kept) constraint index
        const MatrixXd* coeff;
    };
    std::vector<std::vector<TouchedTerm>> touch(static_cast<std::size_t>(nblk));
    VectorXd b_vec(m);
    for (int i = 0; i < m; ++i) {
        const auto& row = prob.rows[static_cast<std::size_t>(kept[static_cast<std::size_t>(i)])];
        b_vec(i) = row.rhs;
        for (const auto& t : row.terms) {
            touch[static_cast<std::size_t>(t.block)].push_back({i, &t.coeff});
        }
    }

    double data_scale = 1.0;
    for (int b = 0; b < nblk; ++b) {
        data_scale = std::max(data_scale, c_blocks[static_cast<std::size_t>(b)].cwiseAbs().maxCoeff());
    }
    if (m > 0) data_scale = std::max(data_scale, b_vec.cwiseAbs().maxCoeff());

    std::vector<MatrixXd> x(static_cast<std::size_t>(nblk)), z(static_cast<std::size_t>(nblk));
    const double init = 10.0 * data_scale;
    for (int b = 0; b < nblk; ++b) {
        const int d = prob.block_dims[static_cast<std::size_t>(b)];
        x[static_cast<std::size_t>(b)] = init * MatrixXd::Identity(d, d);
        z[static_cast<std::size_t>(b)] = init * MatrixXd::Identity(d, d);
    }
    VectorXd y = VectorXd::Zero(m);

    const double b_norm = 1.0 + (m > 0 ? b_vec.cwiseAbs().maxCoeff() : 0.0);
    double c_norm = 1.0;
    for (const auto& c : c_blocks) c_norm = std::max(c_norm, c.cwiseAbs().maxCoeff());

    // Scratch per block.
    std::vector<MatrixXd> r_mat(static_cast<std::size_t>(nblk)), rd(static_cast<std::size_t>(nblk)),
        p_scaled(static_cast<std::size_t>(nblk)), k_target(static_cast<std::size_t>(nblk)),
        dz(static_cast<std::size_t>(nblk)), dzh(static_cast<std::size_t>(nblk)),
        dxh(static_cast<std::size_t>(nblk)), dzh_aff(static_cast<std::size_t>(nblk)),
        dxh_aff(static_cast<std::size_t>(nblk));
    std::vector<VectorXd> lambda(static_cast<std::size_t>(nblk));
    std::vector<std::vector<MatrixXd>> g(static_cast<std::size_t>(nblk));
    for (int b = 0; b < nblk; ++b) {
        g[static_cast<std::size_t>(b)].resize(touch[static_cast<std::size_t>(b)].size());
    }

    auto finish = [&](IpmStatus status, double pobj, double dobj, double pinf, double dinf,
                      double relgap, int iter) {
        res.status = status;
        res.x = x;
        res.y.assign(static_cast<std::size_t>(m), 0.0);
        for (int i = 0; i < m; ++i) res.y[static_cast<std::size_t>(i)] = y(i);
        res.primal_objective = pobj + prob.objective_constant;
        res.dual_objective = dobj + prob.objective_constant;
        res.primal_infeas = pinf;
        res.dual_infeas = dinf;
        res.rel_gap = relgap;
        res.iterations = iter;
        return res;
    };

    // Best iterate seen so far, by the worst of the three convergence
    // measures. The endgame can degrade primal feasibility once the Schur
    // system turns singular; reporting the best visited point avoids losing
    // an already-converged solve.
    struct Snapshot {
        bool set = false;
        double phi = std::numeric_limits<double>::infinity();
        std::vector<MatrixXd> x;
        VectorXd y;
        double pobj = 0, dobj = 0, pinf = 0, dinf = 0, relgap = 0;
    } best;
    int stalled_iters = 0;
    double stall_reference = std::numeric_limits<double>::infinity();

    auto finish_best = [&](double pobj, double dobj, double pinf, double dinf, double relgap,
                           int iter) {
        const double phi_now = std::max({pinf, dinf, relgap});
        if (best.set && best.phi < phi_now) {
            x = best.x;
            y = best.y;
            const IpmStatus st = best.phi <= opt.tol ? IpmStatus::Optimal : IpmStatus::Inaccurate;
            return finish(st, best.pobj, best.dobj, best.pinf, best.dinf, best.relgap, iter);
        }
        const IpmStatus st = phi_now <= opt.tol ? IpmStatus::Optimal : IpmStatus::Inaccurate;
        return finish(st, pobj, dobj, pinf, dinf, relgap, iter);
    };

    for (int iter = 0; iter < opt.max_iter; ++iter) {
        // Residuals and convergence measures.
        double pobj = 0.0;
        double gap = 0.0;
        VectorXd rp = b_vec;
        for (int b = 0; b < nblk; ++b) {
            const auto& xb = x[static_cast<std::size_t>(b)];
            pobj += (c_blocks[static_cast<std::size_t>(b)].cwiseProduct(xb)).sum();
            gap += (xb.cwiseProduct(z[static_cast<std::size_t>(b)])).sum();
            for (const auto& t : touch[static_cast<std::size_t>(b)]) {
                rp(t.row) -= (t.coeff->cwiseProduct(xb)).sum();
            }
        }
        const double dobj = (m > 0) ? b_vec.dot(y) : 0.0;

        double dinf = 0.0;
        for (int b = 0; b < nblk; ++b) {
            auto& rdb = rd[static_cast<std::size_t>(b)];
            rdb = c_blocks[static_cast<std::size_t>(b)] - z[static_cast<std::size_t>(b)];
            for (const auto& t : touch[static_cast<std::size_t>(b)]) {
                rdb -= y(t.row) * (*t.coeff);
            }
            dinf = std::max(dinf, rdb.cwiseAbs().maxCoeff() / c_norm);
        }
        const double pinf = (m > 0) ? rp.cwiseAbs().maxCoeff() / b_norm : 0.0;
        const double relgap = std::abs(gap) / (1.0 + std::abs(pobj) + std::abs(dobj));

#ifdef INCOMPAT_IPM_TRACE
        std::printf("it %3d pobj %+.6e dobj %+.6e pinf %.2e dinf %.2e gap %.2e\n", iter, pobj,
                    dobj, pinf, dinf, relgap);
#endif
        if (pinf <= opt.tol && dinf <= opt.tol && relgap <= opt.tol) {
            return finish(IpmStatus::Optimal, pobj, dobj, pinf, dinf, relgap, iter);
        }

        const double phi = std::max({pinf, dinf, relgap});
        if (phi < best.phi) {
            best.set = true;
            best.phi = phi;
            best.x = x;
            best.y = y;
            best.pobj = pobj;
            best.dobj = dobj;
            best.pinf = pinf;
            best.dinf = dinf;
            best.relgap = relgap;
        }
        if (phi < 0.99 * stall_reference) {
            stall_reference = phi;
            stalled_iters = 0;
        } else if (++stalled_iters > 14) {
            return finish_best(pobj, dobj, pinf, dinf, relgap, iter);
        }

        // Farkas-style divergence checks.
        if (dobj > 1e8 * data_scale && m > 0) {
            const double scale = dobj;
            bool certified = true;
            for (int b = 0; b < nblk && certified; ++b) {
                const int d = prob.block_dims[static_cast<std::size_t>(b)];
                MatrixXd w = MatrixXd::Zero(d, d);
                for (const auto& t : touch[static_cast<std::size_t>(b)]) {
                    w -= (y(t.row) / scale) * (*t.coeff);
                }
                Eigen::SelfAdjointEigenSolver<MatrixXd> es(w, Eigen::EigenvaluesOnly);
                if (es.eigenvalues().minCoeff() < -1e-7) certified = false;
            }
            if (certified) return finish(IpmStatus::Infeasible, pobj, dobj, pinf, dinf, relgap, iter);
        }
        if (pobj < -1e8 * data_scale) {
            double x_norm = 0.0;
            for (const auto& xb : x) x_norm += xb.norm();
            double ray_feas = 0.0;
            VectorXd ax = VectorXd::Zero(m);
            for (int b = 0; b < nblk; ++b) {
                for (const auto& t : touch[static_cast<std::size_t>(b)]) {
                    ax(t.row) += (t.coeff->cwiseProduct(x[static_cast<std::size_t>(b)])).sum();
                }
            }
            if (m > 0) ray_feas = ax.cwiseAbs().maxCoeff() / x_norm;
            if (ray_feas <= 1e-7 && pobj / x_norm < -1e-8) {
                return finish(IpmStatus::Unbounded, pobj, dobj, pinf, dinf, relgap, iter);
            }
        }

        // Rounding can push an iterate marginally outside the cone after an
        // unscaled update; a tiny diagonal lift recovers it. Genuine
        // departures abort.
        auto cholesky_with_lift = [](MatrixXd& mat, Eigen::LLT<MatrixXd>& fact) {
            fact.compute(mat);
            if (fact.info() == Eigen::Success) return true;
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(mat, Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff();
            const double scale = std::max(1.0, mat.diagonal().cwiseAbs().maxCoeff());
            if (lo < -1e-8 * scale) return false;
            mat.diagonal().array() += -std::min(lo, 0.0) + 1e-13 * scale;
            fact.compute(mat);
            return fact.info() == Eigen::Success;
        };

        // NT scaling per block via Cholesky factors and an SVD:
        // X = R Lambda R^T, Z = R^{-T} Lambda R^{-1}.
        bool factor_ok = true;
        for (int b = 0; b < nblk; ++b) {
            const int d = prob.block_dims[static_cast<std::size_t>(b)];
            Eigen::LLT<MatrixXd> lx, lz;
            if (!cholesky_with_lift(x[static_cast<std::size_t>(b)], lx) ||
                !cholesky_with_lift(z[static_cast<std::size_t>(b)], lz)) {
                factor_ok = false;
                break;
            }
            const MatrixXd lxm = lx.matrixL();
            const MatrixXd lzm = lz.matrixL();
            Eigen::JacobiSVD<MatrixXd> svd(lzm.transpose() * lxm,
                                           Eigen::ComputeFullU | Eigen::ComputeFullV);
            const VectorXd sv = svd.singularValues();
            lambda[static_cast<std::size_t>(b)] = sv;
            VectorXd inv_sqrt_sv(d);
            for (int i = 0; i < d; ++i) inv_sqrt_sv(i) = 1.0 / std::sqrt(sv(i));
            r_mat[static_cast<std::size_t>(b)] =
                lxm * svd.matrixV() * inv_sqrt_sv.asDiagonal();
        }
        if (!factor_ok) {
#ifdef INCOMPAT_IPM_TRACE
            std::printf("    abort: cone factorization failed\n");
#endif
            // Iterate hit the cone boundary numerically; report the best
            // point seen.
            return finish_best(pobj, dobj, pinf, dinf, relgap, iter);
        }

        // Schur complement M_ij = sum_b <G_i, G_j> with G_i = R^T A_i R.
        MatrixXd schur = MatrixXd::Zero(m, m);
        for (int b = 0; b < nblk; ++b) {
            const auto& tl = touch[static_cast<std::size_t>(b)];
            auto& gb = g[static_cast<std::size_t>(b)];
            const auto& rb = r_mat[static_cast<std::size_t>(b)];
            for (std::size_t u = 0; u < tl.size(); ++u) {
                gb[u] = rb.transpose() * (*tl[u].coeff) * rb;
            }
            for (std::size_t u = 0; u < tl.size(); ++u) {
                for (std::size_t v = u; v < tl.size(); ++v) {
                    const double val = (gb[u].cwiseProduct(gb[v])).sum();
                    schur(tl[u].row, tl[v].row) += val;
                    if (tl[u].row != tl[v].row) schur(tl[v].row, tl[u].row) += val;
                }
            }
            p_scaled[static_cast<std::size_t>(b)] =
                rb.transpose() * rd[static_cast<std::size_t>(b)] * rb;
        }
        // The Schur system's condition number grows like 1/mu^2, which
        // exceeds double precision before the 1e-8 endgame. Factor and
        // refine in long double; the extra digits keep the search direction
        // feasible-accurate all the way down the path.
        using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
        using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
        MatrixXld schur_ld = schur.cast<long double>();
        Eigen::LDLT<MatrixXld> schur_fact(schur_ld);
        if (schur_fact.info() != Eigen::Success) {
            schur_ld.diagonal().array() +=
                static_cast<long double>(1e-13) * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
            schur_fact.compute(schur_ld);
            if (schur_fact.info() != Eigen::Success) {
#ifdef INCOMPAT_IPM_TRACE
                std::printf("    abort: Schur factorization failed\n");
#endif
                return finish_best(pobj, dobj, pinf, dinf, relgap, iter);
            }
        }
        auto solve_refined = [&](const VectorXd& h) {
            const VectorXld h_ld = h.cast<long double>();
            VectorXld dy = schur_fact.solve(h_ld);
            for (int round = 0; round < 2; ++round) {
                const VectorXld residual = h_ld - schur_ld * dy;
                dy += schur_fact.solve(residual);
            }
            return VectorXd(dy.cast<double>());
        };

        const double mu = gap / total_dim;

        // Search direction for the complementarity target sigma_mu. The
        // second-order flag adds the Mehrotra correction from the stored
        // affine direction; without it this is a plain (affine or centering)
        // Newton step.
        auto solve_direction = [&](double sigma_mu, bool second_order) {
            VectorXd h = rp;
            for (int b = 0; b < nblk; ++b) {
                const auto& lam = lambda[static_cast<std::size_t>(b)];
                const int d = static_cast<int>(lam.size());
                auto& kt = k_target[static_cast<std::size_t>(b)];
                if (!second_order) {
                    kt = MatrixXd::Zero(d, d);
                    for (int i = 0; i < d; ++i) kt(i, i) = sigma_mu / lam(i) - lam(i);
                } else {
                    MatrixXd rc = -0.5 * (dxh_aff[static_cast<std::size_t>(b)] *
                                              dzh_aff[static_cast<std::size_t>(b)] +
                                          dzh_aff[static_cast<std::size_t>(b)] *
                                              dxh_aff[static_cast<std::size_t>(b)]);
                    rc.diagonal().array() += sigma_mu;
                    rc.diagonal() -= lam.cwiseProduct(lam);
                    for (int i = 0; i < d; ++i) {
                        for (int j = 0; j < d; ++j) {
                            rc(i, j) *= 2.0 / (lam(i) + lam(j));
                        }
                    }
                    kt = rc;
                }
                const auto& tl = touch[static_cast<std::size_t>(b)];
                const auto& gb = g[static_cast<std::size_t>(b)];
                const MatrixXd pk = p_scaled[static_cast<std::size_t>(b)] - kt;
                for (std::size_t u = 0; u < tl.size(); ++u) {
                    h(tl[u].row) += (gb[u].cwiseProduct(pk)).sum();
                }
            }
            const VectorXd dy = (m > 0) ? solve_refined(h) : VectorXd();
            for (int b = 0; b < nblk; ++b) {
                auto& dzb = dz[static_cast<std::size_t>(b)];
                dzb = rd[static_cast<std::size_t>(b)];
                for (const auto& t : touch[static_cast<std::size_t>(b)]) {
                    dzb -= dy(t.row) * (*t.coeff);
                }
                const auto& rb = r_mat[static_cast<std::size_t>(b)];
                dzh[static_cast<std::size_t>(b)] = rb.transpose() * dzb * rb;
                dxh[static_cast<std::size_t>(b)] =
                    k_target[static_cast<std::size_t>(b)] - dzh[static_cast<std::size_t>(b)];
            }
            return dy;
        };

        // Predictor (affine scaling) step.
        solve_direction(0.0, false);
        double ap_aff = 1.0, ad_aff = 1.0;
        for (int b = 0; b < nblk; ++b) {
            ap_aff = std::min(ap_aff, max_step(lambda[static_cast<std::size_t>(b)],
                                               dxh[static_cast<std::size_t>(b)]));
            ad_aff = std::min(ad_aff, max_step(lambda[static_cast<std::size_t>(b)],
                                               dzh[static_cast<std::size_t>(b)]));
        }
        double mu_aff = 0.0;
        for (int b = 0; b < nblk; ++b) {
            const auto& lam = lambda[static_cast<std::size_t>(b)];
            MatrixXd xa = dxh[static_cast<std::size_t>(b)] * ap_aff;
            xa.diagonal() += lam;
            MatrixXd za = dzh[static_cast<std::size_t>(b)] * ad_aff;
            za.diagonal() += lam;
            mu_aff += (xa.cwiseProduct(za)).sum();
        }
        mu_aff /= total_dim;
        double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);
        sigma = std::clamp(sigma, 1e-8, 1.0);
        // Do not drive mu far below what the gap tolerance asks for; an
        // overshoot only inflates the Schur condition number and erodes the
        // feasibility accuracy of the directions.
        const double mu_target =
            0.3 * opt.tol * (1.0 + std::abs(pobj) + std::abs(dobj)) / total_dim;
        if (sigma * mu < mu_target) sigma = std::min(1.0, mu_target / mu);
        for (int b = 0; b < nblk; ++b) {
            dxh_aff[static_cast<std::size_t>(b)] = dxh[static_cast<std::size_t>(b)];
            dzh_aff[static_cast<std::size_t>(b)] = dzh[static_cast<std::size_t>(b)];
        }

        // Combined predictor-corrector step.
        VectorXd dy = solve_direction(sigma * mu, true);
        auto step_lengths = [&](double& out_p, double& out_d) {
            out_p = 1.0;
            out_d = 1.0;
            for (int b = 0; b < nblk; ++b) {
                out_p = std::min(out_p,
                                 opt.step_fraction * max_step(lambda[static_cast<std::size_t>(b)],
                                                              dxh[static_cast<std::size_t>(b)]));
                out_d = std::min(out_d,
                                 opt.step_fraction * max_step(lambda[static_cast<std::size_t>(b)],
                                                              dzh[static_cast<std::size_t>(b)]));
            }
            out_p = std::min(out_p, 1.0);
            out_d = std::min(out_d, 1.0);
        };
        double ap = 1.0, ad = 1.0;
        step_lengths(ap, ad);
        if (std::min(ap, ad) < 1e-7) {
            // The corrected direction is unusable (degenerate Schur system);
            // retreat to a pure centering step.
            dy = solve_direction(mu, false);
            step_lengths(ap, ad);
        }
        if (ap < 1e-10 && ad < 1e-10) {
#ifdef INCOMPAT_IPM_TRACE
            std::printf("    abort: step lengths collapsed\n");
#endif
            return finish_best(pobj, dobj, pinf, dinf, relgap, iter);
        }

        for (int b = 0; b < nblk; ++b) {
            const auto& rb = r_mat[static_cast<std::size_t>(b)];
            MatrixXd dx_full = rb * dxh[static_cast<std::size_t>(b)] * rb.transpose();
            auto& xb = x[static_cast<std::size_t>(b)];
            xb += ap * dx_full;
            xb = 0.5 * (xb + xb.transpose()).eval();
            auto& zb = z[static_cast<std::size_t>(b)];
            zb += ad * dz[static_cast<std::size_t>(b)];
            zb = 0.5 * (zb + zb.transpose()).eval();
        }
        if (m > 0) y += ad * dy;
    }

    // Out of iterations: recompute measures for the report.
    double pobj = 0.0, gap = 0.0;
    VectorXd rp = b_vec;
    for (int b = 0; b < nblk; ++b) {
        pobj += (c_blocks[static_cast<std::size_t>(b)].cwiseProduct(x[static_cast<std::size_t>(b)]))
                    .sum();
        gap += (x[static_cast<std::size_t>(b)].cwiseProduct(z[static_cast<std::size_t>(b)])).sum();
        for (const auto& t : touch[static_cast<std::size_t>(b)]) {
            rp(t.row) -= (t.coeff->cwiseProduct(x[static_cast<std::size_t>(b)])).sum();
        }
    }
    const double dobj = (m > 0) ? b_vec.dot(y) : 0.0;
    const double pinf = (m > 0) ? rp.cwiseAbs().maxCoeff() / b_norm : 0.0;
    double dinf = 0.0;
    for (int b = 0; b < nblk; ++b) {
        MatrixXd rdb = c_blocks[static_cast<std::size_t>(b)] - z[static_cast<std::size_t>(b)];
        for (const auto& t : touch[static_cast<std::size_t>(b)]) rdb -= y(t.row) * (*t.coeff);
        dinf = std::max(dinf, rdb.cwiseAbs().maxCoeff() / c_norm);
    }
    const double relgap = std::abs(gap) / (1.0 + std::abs(pobj) + std::abs(dobj));
    return finish_best(pobj, dobj, pinf, dinf, relgap, opt.max_iter);
}

}  // namespace incompat::conic::detail
