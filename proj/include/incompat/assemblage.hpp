#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "incompat/hermitian.hpp"

namespace incompat {

/// A POVM: effects are PSD (min eigenvalue >= -1e-9) and sum to the identity
/// (entrywise within 1e-9).
class Measurement {
public:
    explicit Measurement(std::vector<HermitianOp> effects) : effects_(std::move(effects)) {
        if (effects_.empty()) throw std::invalid_argument("Measurement: no effects");
        const int d = effects_.front().dim();
        CMatrix sum = CMatrix::Zero(d, d);
        for (const auto& e : effects_) {
            if (e.dim() != d) throw std::invalid_argument("Measurement: mixed dimensions");
            if (!is_psd(e.mat())) throw std::invalid_argument("Measurement: effect is not PSD");
            sum += e.mat();
        }
        if ((sum - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > kCompletenessTol) {
            throw std::invalid_argument("Measurement: effects do not sum to identity");
        }
    }

    int dim() const { return effects_.front().dim(); }
    int outcomes() const { return static_cast<int>(effects_.size()); }
    const HermitianOp& effect(int a) const { return effects_.at(static_cast<std::size_t>(a)); }
    const std::vector<HermitianOp>& effects() const { return effects_; }

private:
    std::vector<HermitianOp> effects_;
};

/// A measurement assemblage: m POVMs M_{a|x} on a common dimension.
class Assemblage {
public:
    explicit Assemblage(std::vector<Measurement> measurements)
        : measurements_(std::move(measurements)) {
        if (measurements_.empty()) throw std::invalid_argument("Assemblage: need m >= 1");
        const int d = measurements_.front().dim();
        for (const auto& m : measurements_) {
            if (m.dim() != d) throw std::invalid_argument("Assemblage: mixed dimensions");
        }
    }

    int dim() const { return measurements_.front().dim(); }
    int settings() const { return static_cast<int>(measurements_.size()); }
    int outcomes(int x) const { return measurements_.at(static_cast<std::size_t>(x)).outcomes(); }
    const Measurement& measurement(int x) const {
        return measurements_.at(static_cast<std::size_t>(x));
    }
    const CMatrix& effect(int x, int a) const { return measurement(x).effect(a).mat(); }

    std::vector<int> outcome_counts() const {
        std::vector<int> k;
        k.reserve(measurements_.size());
        for (const auto& m : measurements_) k.push_back(m.outcomes());
        return k;
    }

private:
    std::vector<Measurement> measurements_;
};

/// Depolarizing visibility, a real number in [0, 1].
class Visibility {
public:
    explicit Visibility(double eta) : eta_(eta) {
        if (!(eta >= 0.0 && eta <= 1.0)) {
            throw std::invalid_argument("Visibility: eta must lie in [0, 1]");
        }
    }
    double eta() const { return eta_; }

private:
    double eta_;
};

/// Sub-normalized states sigma_{a|x} with a setting-independent marginal.
class SubnormalizedStateAssemblage {
public:
    explicit SubnormalizedStateAssemblage(std::vector<std::vector<HermitianOp>> states)
        : states_(std::move(states)) {
        if (states_.empty() || states_.front().empty()) {
            throw std::invalid_argument("SubnormalizedStateAssemblage: empty");
        }
        const int d = states_.front().front().dim();
        CMatrix first_marginal;
        for (std::size_t x = 0; x < states_.size(); ++x) {
            CMatrix marg = CMatrix::Zero(d, d);
            for (const auto& s : states_[x]) {
                if (!is_psd(s.mat())) {
                    throw std::invalid_argument("SubnormalizedStateAssemblage: state not PSD");
                }
                marg += s.mat();
            }
            if (x == 0) {
                first_marginal = marg;
            } else if ((marg - first_marginal).cwiseAbs().maxCoeff() > kPsdTol) {
                throw std::invalid_argument(
                    "SubnormalizedStateAssemblage: marginal depends on the setting");
            }
        }
    }

    int settings() const { return static_cast<int>(states_.size()); }
    const std::vector<std::vector<HermitianOp>>& states() const { return states_; }

private:
    std::vector<std::vector<HermitianOp>> states_;
};

/// Binary projective qubit measurements (1 +- n.sigma)/2, one per axis.
inline Assemblage make_pauli_assemblage(const std::vector<std::array<double, 3>>& axes) {
    std::vector<Measurement> ms;
    ms.reserve(axes.size());
    for (const auto& n : axes) {
        const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        if (std::abs(len - 1.0) > kHermitianTol) {
            throw std::invalid_argument("make_pauli_assemblage: axis is not a unit vector");
        }
        const CMatrix ns = bloch_operator(n[0], n[1], n[2]);
        std::vector<HermitianOp> effects;
        effects.emplace_back(0.5 * (identity_c(2) + ns));
        effects.emplace_back(0.5 * (identity_c(2) - ns));
        ms.emplace_back(std::move(effects));
    }
    return Assemblage(std::move(ms));
}

inline CMatrix depolarize_effect(const CMatrix& m, double eta) {
    const int d = static_cast<int>(m.rows());
    return eta * m + (1.0 - eta) * (m.trace().real() / d) * identity_c(d);
}

/// eta M + (1 - eta) Tr[M] 1/d, applied to every effect.
inline Assemblage depolarize(const Assemblage& a, const Visibility& v) {
    std::vector<Measurement> ms;
    ms.reserve(static_cast<std::size_t>(a.settings()));
    for (int x = 0; x < a.settings(); ++x) {
        std::vector<HermitianOp> effects;
        effects.reserve(static_cast<std::size_t>(a.outcomes(x)));
        for (int out = 0; out < a.outcomes(x); ++out) {
            effects.emplace_back(depolarize_effect(a.effect(x, out), v.eta()));
        }
        ms.emplace_back(std::move(effects));
    }
    return Assemblage(std::move(ms));
}

/// Sum of operator norms over a raw effect family (no POVM validation).
inline double assemblage_norm(const std::vector<std::vector<CMatrix>>& effects) {
    double total = 0.0;
    for (const auto& row : effects) {
        for (const auto& e : row) total += operator_norm(e);
    }
    return total;
}

inline double assemblage_norm(const Assemblage& a) {
    double total = 0.0;
    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) total += operator_norm(a.effect(x, out));
    }
    return total;
}

/// || A - B ||_A: assemblage norm of the effectwise difference.
inline double assemblage_distance(const Assemblage& a, const Assemblage& b) {
    if (a.settings() != b.settings() || a.dim() != b.dim()) {
        throw std::invalid_argument("assemblage_distance: shape mismatch");
    }
    double total = 0.0;
    for (int x = 0; x < a.settings(); ++x) {
        if (a.outcomes(x) != b.outcomes(x)) {
            throw std::invalid_argument("assemblage_distance: outcome mismatch");
        }
        for (int out = 0; out < a.outcomes(x); ++out) {
            total += operator_norm(a.effect(x, out) - b.effect(x, out));
        }
    }
    return total;
}

/// Steering map for the maximally entangled state: sigma_{a|x} = M_{a|x}^T / d,
/// transpose taken in the computational basis.
inline SubnormalizedStateAssemblage steering_assemblage(const Assemblage& a) {
    const int d = a.dim();
    std::vector<std::vector<HermitianOp>> states;
    states.reserve(static_cast<std::size_t>(a.settings()));
    for (int x = 0; x < a.settings(); ++x) {
        std::vector<HermitianOp> row;
        row.reserve(static_cast<std::size_t>(a.outcomes(x)));
        for (int out = 0; out < a.outcomes(x); ++out) {
            row.emplace_back(a.effect(x, out).transpose() / static_cast<double>(d));
        }
        states.push_back(std::move(row));
    }
    return SubnormalizedStateAssemblage(std::move(states));
}

namespace detail {

// Gaussian sampler built directly on mt19937_64 so that streams are
// reproducible across standard libraries.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double uniform() {  // in [0, 1)
        return std::ldexp(static_cast<double>(rng_() >> 11), -53);
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    CMatrix ginibre(int rows, int cols) {
        CMatrix m(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) m(i, j) = Complex(gaussian(), gaussian());
        }
        return m;
    }

private:
    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline CMatrix inverse_sqrt(const CMatrix& psd) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(psd);
    Eigen::VectorXd inv_sqrt_ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < inv_sqrt_ev.size(); ++i) {
        inv_sqrt_ev(i) = 1.0 / std::sqrt(std::max(inv_sqrt_ev(i), 1e-300));
    }
    return es.eigenvectors() * inv_sqrt_ev.asDiagonal() * es.eigenvectors().adjoint();
}

/// Random density matrix from the Ginibre ensemble.
inline CMatrix random_state(int d, GaussianSampler& sampler) {
    const CMatrix w = sampler.ginibre(d, d);
    CMatrix rho = w * w.adjoint();
    rho /= rho.trace().real();
    return hermitian_part(rho);
}

}  // namespace detail

/// Full-rank random POVM sampler: k Wishart factors W_a W_a^dag normalized by
/// the inverse square root of their sum. Deterministic in the seed.
inline Assemblage random_assemblage(int d, int m, int k, std::uint64_t seed) {
    if (d < 2 || m < 1 || k < 2) {
        throw std::invalid_argument("random_assemblage: need d >= 2, m >= 1, k >= 2");
    }
    detail::GaussianSampler sampler(seed);
    std::vector<Measurement> ms;
    ms.reserve(static_cast<std::size_t>(m));
    for (int x = 0; x < m; ++x) {
        std::vector<CMatrix> factors;
        CMatrix total = CMatrix::Zero(d, d);
        for (int a = 0; a < k; ++a) {
            const CMatrix w = sampler.ginibre(d, d);
            factors.push_back(w * w.adjoint());
            total += factors.back();
        }
        const CMatrix t = detail::inverse_sqrt(total);
        std::vector<HermitianOp> effects;
        effects.reserve(static_cast<std::size_t>(k));
        for (int a = 0; a < k; ++a) effects.emplace_back(hermitian_part(t * factors[a] * t));
        ms.emplace_back(std::move(effects));
    }
    return Assemblage(std::move(ms));
}

// Named assemblages used by the CLI and throughout the tests.
inline Assemblage pauli_xyz() {
    return make_pauli_assemblage({{{1, 0, 0}}, {{0, 1, 0}}, {{0, 0, 1}}});
}

/// sigma_x, sigma_z and the Hadamard direction (x + z)/sqrt(2).
inline Assemblage xzh() {
    const double s = 1.0 / std::sqrt(2.0);
    return make_pauli_assemblage({{{1, 0, 0}}, {{0, 0, 1}}, {{s, 0, s}}});
}

}  // namespace incompat
