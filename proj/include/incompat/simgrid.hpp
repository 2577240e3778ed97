#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "incompat/assemblage.hpp"
#include "incompat/jm.hpp"

namespace incompat {

/// Classical pre-processing p(x'|x): a row-stochastic m x n matrix.
class PreProcessing {
public:
    explicit PreProcessing(RMatrix probs) : probs_(std::move(probs)) {
        if (probs_.rows() < 1 || probs_.cols() < 1) {
            throw std::invalid_argument("PreProcessing: empty matrix");
        }
        for (Eigen::Index x = 0; x < probs_.rows(); ++x) {
            double row_sum = 0.0;
            for (Eigen::Index c = 0; c < probs_.cols(); ++c) {
                if (probs_(x, c) < -1e-15) {
                    throw std::invalid_argument("PreProcessing: negative entry");
                }
                row_sum += probs_(x, c);
            }
            if (std::abs(row_sum - 1.0) > 1e-12) {
                throw std::invalid_argument("PreProcessing: row does not sum to 1");
            }
        }
    }

    int settings() const { return static_cast<int>(probs_.rows()); }
    int simulators() const { return static_cast<int>(probs_.cols()); }
    double operator()(int x, int xp) const { return probs_(x, xp); }
    const RMatrix& probs() const { return probs_; }

private:
    RMatrix probs_;
};

/// The pre-processing used for the x/z/Hadamard example: simulate x by the
/// second simulator, z by the first, and the Hadamard direction by an even
/// mixture.
inline PreProcessing xzh_reference_pre() {
    RMatrix p(3, 2);
    p << 0.0, 1.0, 1.0, 0.0, 0.5, 0.5;
    return PreProcessing(p);
}

/// Hypercubic grid over the free coordinates of a row-stochastic matrix,
/// inclusive endpoints {0, ..., 1}. The nominal step feeds the error bound;
/// the realized spacing 1/(points-1) never exceeds it.
struct GridSpec {
    double step = 0.02;
    int points_per_coordinate = 51;

    static GridSpec from_step(double ell) {
        if (!(ell > 0.0 && ell <= 1.0)) {
            throw std::invalid_argument("GridSpec: step must lie in (0, 1]");
        }
        GridSpec g;
        g.step = ell;
        g.points_per_coordinate = static_cast<int>(std::ceil(1.0 / ell - 1e-9)) + 1;
        return g;
    }

    double value(int index) const {
        return static_cast<double>(index) / (points_per_coordinate - 1);
    }
};

struct FixedPreSolution {
    double nu = 0.0;
    std::vector<std::vector<CMatrix>> simulators;  // n POVMs in vector-outcome form
    std::vector<std::vector<CMatrix>> simulated;   // reconstructed effects N_{a|x}
};

namespace detail {

// Simulator POVMs in canonical vector-outcome form: each of the n simulators
// carries prod_x k_x outcomes, and the fixed post-processing reads off the
// coordinate of the requested setting.
struct SimulatorVars {
    std::vector<ParentVars> povms;  // one per simulator setting
};

inline SimulatorVars add_simulator_vars(conic::Problem& p, const Assemblage& a, int n,
                                        bool real_vars) {
    SimulatorVars vars;
    const std::vector<int> counts = a.outcome_counts();
    for (int xp = 0; xp < n; ++xp) {
        vars.povms.push_back(add_parent_vars(p, "S_" + std::to_string(xp), a.dim(), counts,
                                             real_vars, std::nullopt));
    }
    return vars;
}

/// N_{a|x} = sum_{x'} p(x'|x) sum_{a' : a'_x = a} S_{a'|x'}.
inline conic::OperatorExpr simulated_effect(const SimulatorVars& vars, const PreProcessing& pre,
                                            int dim, int x, int out) {
    conic::OperatorExpr recon(dim);
    for (int xp = 0; xp < pre.simulators(); ++xp) {
        const double weight = pre(x, xp);
        if (weight == 0.0) continue;
        const auto& pv = vars.povms[static_cast<std::size_t>(xp)];
        for (std::size_t t = 0; t < pv.labels.size(); ++t) {
            if (pv.labels[t][static_cast<std::size_t>(x)] == out) {
                recon.add_matrix_var(pv.vars[t], weight);
            }
        }
    }
    return recon;
}

inline void check_pre(const Assemblage& a, int n, const PreProcessing& pre) {
    if (pre.settings() != a.settings() || pre.simulators() != n) {
        throw std::invalid_argument("pre-processing shape does not match (m, n)");
    }
}

inline FixedPreSolution extract_fixed_pre(const conic::Problem& p, const conic::Solution& sol,
                                          const Assemblage& a, const PreProcessing& pre,
                                          const SimulatorVars& vars, double nu) {
    FixedPreSolution out;
    out.nu = nu;
    for (const auto& pv : vars.povms) {
        std::vector<CMatrix> povm;
        povm.reserve(pv.vars.size());
        for (int v : pv.vars) {
            povm.push_back(sol.matrix(p.mat_vars()[static_cast<std::size_t>(v)].label));
        }
        out.simulators.push_back(std::move(povm));
    }
    const int d = a.dim();
    for (int x = 0; x < a.settings(); ++x) {
        std::vector<CMatrix> row;
        for (int outc = 0; outc < a.outcomes(x); ++outc) {
            CMatrix n_ax = CMatrix::Zero(d, d);
            for (int xp = 0; xp < pre.simulators(); ++xp) {
                const auto& pv = vars.povms[static_cast<std::size_t>(xp)];
                for (std::size_t t = 0; t < pv.labels.size(); ++t) {
                    if (pv.labels[t][static_cast<std::size_t>(x)] == outc) {
                        n_ax += pre(x, xp) * out.simulators[static_cast<std::size_t>(xp)][t];
                    }
                }
            }
            row.push_back(std::move(n_ax));
        }
        out.simulated.push_back(std::move(row));
    }
    return out;
}

}  // namespace detail

/// Distance nu_p from A to the assemblages reachable with n simulator
/// measurements under the FIXED pre-processing `pre` (and the canonical
/// deterministic post-processing). nu_p = 0 within the membership margin
/// means A is reproduced exactly by this strategy.
inline FixedPreSolution sim_fixed_pre_distance(const Assemblage& a, int n,
                                               const PreProcessing& pre,
                                               double tol = conic::kDefaultSolveTol) {
    detail::check_pre(a, n, pre);
    const bool real_vars = assemblage_is_real(a);
    conic::Problem p;
    const auto vars = detail::add_simulator_vars(p, a, n, real_vars);

    conic::LinearExpr objective;
    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            conic::OperatorExpr gap = detail::simulated_effect(vars, pre, a.dim(), x, out);
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
        throw conic::inconclusive_error("sim_fixed_pre_distance: solver returned " +
                                        std::string(conic::status_name(sol.status)));
    }
    return detail::extract_fixed_pre(p, sol, a, pre, vars, sol.objective_value);
}

/// Largest eta such that depolarize(A, eta) is reproduced exactly under the
/// fixed strategy. This is a lower bound on the n-simulability threshold.
inline Visibility sim_fixed_pre_visibility(const Assemblage& a, int n, const PreProcessing& pre,
                                           double tol = conic::kDefaultSolveTol) {
    detail::check_pre(a, n, pre);
    const bool real_vars = assemblage_is_real(a);
    conic::Problem p;
    const int eta = p.add_scalar_var("eta", 0.0);
    p.add_scalar_upper_bound(eta, 1.0);
    const auto vars = detail::add_simulator_vars(p, a, n, real_vars);

    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            conic::OperatorExpr eq = detail::simulated_effect(vars, pre, a.dim(), x, out);
            eq.add(detail::noisy_effect_expr(a, x, out, eta).negate());
            add_operator_equality(p, eq);
        }
    }
    conic::LinearExpr objective;
    objective.add_scalar(eta, -1.0);
    p.set_objective(objective);

    const conic::Solution sol = conic::solve(p, tol);
    if (!sol.optimal()) {
        throw conic::inconclusive_error("sim_fixed_pre_visibility: solver returned " +
                                        std::string(conic::status_name(sol.status)));
    }
    return Visibility(std::clamp(sol.scalar("eta"), 0.0, 1.0));
}

/// Certified lower bound on the distance from A to the (non-convex) set of
/// 2-simulable assemblages: evaluates the fixed-pre distance on every grid
/// point and subtracts the grid-coarseness error
///   epsilon = (step/2) |A| |X| |X'|.
/// lower_bound > 0 certifies that no 2-simulation strategy exists.
struct GridCertificate {
    double nu_g_star = 0.0;
    double epsilon = 0.0;
    double lower_bound = 0.0;
    RMatrix argmin_pre;  // row-stochastic matrix attaining nu_g_star
    std::int64_t grid_points_evaluated = 0;
    double step = 0.0;
    int outcomes = 0;    // |A| (per setting)
    int settings = 0;    // |X|
    int simulators = 0;  // |X'|
    std::vector<std::int64_t> failed_points;  // inconclusive solves, by grid index

    /// A certificate is only usable when every grid point solved cleanly.
    bool valid() const { return failed_points.empty(); }
};

/// epsilon = (step/2) |A| |X| |X'| for uniform outcome counts; heterogeneous
/// counts use sum_x k_x in place of |A| |X|.
inline double grid_epsilon(double step, const Assemblage& a, int n) {
    int total_outcomes = 0;
    for (int x = 0; x < a.settings(); ++x) total_outcomes += a.outcomes(x);
    return 0.5 * step * total_outcomes * n;
}

inline GridCertificate sim_grid_certificate(const Assemblage& a, int n, const GridSpec& grid,
                                            int jobs = 1,
                                            double tol = conic::kDefaultSolveTol) {
    if (n != 2) {
        // The (step/2) per-coordinate coverage argument needs every rounding
        // of a stochastic row to stay row-stochastic, which holds for a
        // single free coordinate per row but fails for n >= 3 near the
        // simplex boundary.
        throw std::invalid_argument("sim_grid_certificate: only n = 2 is supported");
    }
    if (jobs < 1) throw std::invalid_argument("sim_grid_certificate: jobs must be >= 1");

    const int m = a.settings();
    const int npts = grid.points_per_coordinate;
    std::int64_t total = 1;
    for (int x = 0; x < m; ++x) total *= npts;

    struct PointResult {
        double nu = 0.0;
        bool failed = false;
    };
    std::vector<PointResult> results(static_cast<std::size_t>(total));

    auto pre_for_index = [&](std::int64_t index) {
        RMatrix probs(m, 2);
        std::int64_t rest = index;
        for (int x = m - 1; x >= 0; --x) {
            const int digit = static_cast<int>(rest % npts);
            rest /= npts;
            const double p1 = grid.value(digit);
            probs(x, 0) = p1;
            probs(x, 1) = 1.0 - p1;
        }
        return PreProcessing(probs);
    };

    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::int64_t index = next.fetch_add(1);
            if (index >= total) break;
            try {
                results[static_cast<std::size_t>(index)].nu =
                    sim_fixed_pre_distance(a, n, pre_for_index(index), tol).nu;
            } catch (const conic::inconclusive_error&) {
                results[static_cast<std::size_t>(index)].failed = true;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Deterministic reduction in lexicographic grid order.
    GridCertificate cert;
    cert.step = grid.step;
    cert.settings = m;
    cert.simulators = n;
    cert.outcomes = a.outcomes(0);
    cert.grid_points_evaluated = total;
    cert.epsilon = grid_epsilon(grid.step, a, n);
    std::int64_t best_index = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < total; ++i) {
        const auto& r = results[static_cast<std::size_t>(i)];
        if (r.failed) {
            cert.failed_points.push_back(i);
            continue;
        }
        if (r.nu < best) {
            best = r.nu;
            best_index = i;
        }
    }
    if (best_index < 0) {
        throw conic::inconclusive_error("sim_grid_certificate: every grid point failed");
    }
    cert.nu_g_star = best;
    cert.lower_bound = cert.nu_g_star - cert.epsilon;
    cert.argmin_pre = pre_for_index(best_index).probs();
    return cert;
}

}  // namespace incompat
