#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace incompat {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kCompletenessTol = 1e-9;

inline CMatrix hermitian_part(const CMatrix& m) {
    return 0.5 * (m + m.adjoint());
}

inline double hermiticity_defect(const CMatrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Dense complex Hermitian matrix, validated on construction.
class HermitianOp {
public:
    explicit HermitianOp(CMatrix entries) : entries_(std::move(entries)) {
        if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
            throw std::invalid_argument("HermitianOp: matrix must be square and nonempty");
        }
        if (hermiticity_defect(entries_) > kHermitianTol) {
            throw std::invalid_argument("HermitianOp: matrix is not Hermitian within 1e-12");
        }
        entries_ = hermitian_part(entries_);
    }

    int dim() const { return static_cast<int>(entries_.rows()); }
    const CMatrix& mat() const { return entries_; }

private:
    CMatrix entries_;
};

inline Eigen::VectorXd eigenvalues_of(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double min_eigenvalue(const CMatrix& h) {
    return eigenvalues_of(h).minCoeff();
}

/// Operator norm (largest |eigenvalue|) of a Hermitian matrix.
inline double operator_norm(const CMatrix& h) {
    const Eigen::VectorXd ev = eigenvalues_of(h);
    return std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
}

inline bool is_psd(const CMatrix& h, double tol = kPsdTol) {
    return min_eigenvalue(h) >= -tol;
}

// Fixed 2x2 operators used throughout the qubit examples.
inline CMatrix identity_c(int d) { return CMatrix::Identity(d, d); }

inline CMatrix pauli_x() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline CMatrix pauli_y() {
    CMatrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}

inline CMatrix pauli_z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

/// n . sigma for a real 3-vector n.
inline CMatrix bloch_operator(double nx, double ny, double nz) {
    return nx * pauli_x() + ny * pauli_y() + nz * pauli_z();
}

/// Orthonormal Hermitian basis of d x d matrices: Tr[E_i E_j] = delta_ij.
/// Order: diagonal units, then symmetric pairs, then antisymmetric pairs,
/// both scanned row-major over the strict upper triangle.
inline std::vector<CMatrix> hermitian_basis(int d) {
    std::vector<CMatrix> basis;
    basis.reserve(static_cast<std::size_t>(d) * d);
    const double s = 1.0 / std::sqrt(2.0);
    for (int p = 0; p < d; ++p) {
        CMatrix e = CMatrix::Zero(d, d);
        e(p, p) = 1.0;
        basis.push_back(e);
    }
    for (int p = 0; p < d; ++p) {
        for (int q = p + 1; q < d; ++q) {
            CMatrix e = CMatrix::Zero(d, d);
            e(p, q) = s;
            e(q, p) = s;
            basis.push_back(e);
            CMatrix f = CMatrix::Zero(d, d);
            f(p, q) = Complex(0, -s);
            f(q, p) = Complex(0, s);
            basis.push_back(f);
        }
    }
    return basis;
}

/// Generalized Gell-Mann basis: d^2 - 1 traceless Hermitian matrices with
/// Tr[B_j B_k] = 2 delta_jk (reduces to the Pauli basis at d = 2).
inline std::vector<CMatrix> gellmann_basis(int d) {
    std::vector<CMatrix> basis;
    basis.reserve(static_cast<std::size_t>(d) * d - 1);
    for (int p = 0; p < d; ++p) {
        for (int q = p + 1; q < d; ++q) {
            CMatrix e = CMatrix::Zero(d, d);
            e(p, q) = 1.0;
            e(q, p) = 1.0;
            basis.push_back(e);
            CMatrix f = CMatrix::Zero(d, d);
            f(p, q) = Complex(0, -1);
            f(q, p) = Complex(0, 1);
            basis.push_back(f);
        }
    }
    for (int k = 1; k < d; ++k) {
        // diag(1,...,1,-k,0,...,0) / sqrt(k(k+1)/2), k ones
        CMatrix e = CMatrix::Zero(d, d);
        const double norm = std::sqrt(2.0 / (k * (k + 1.0)));
        for (int j = 0; j < k; ++j) e(j, j) = norm;
        e(k, k) = -k * norm;
        basis.push_back(e);
    }
    return basis;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

/// I x ... x op x ... x I with `op` in tensor slot `slot` of `n_slots`
/// d-dimensional factors.
inline CMatrix embed_at_slot(const CMatrix& op, int slot, int n_slots, int d) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (int j = 0; j < n_slots; ++j) {
        out = kron(out, j == slot ? op : identity_c(d));
    }
    return out;
}

inline double real_inner(const CMatrix& a, const CMatrix& b) {
    return (a.adjoint() * b).trace().real();
}

}  // namespace incompat
