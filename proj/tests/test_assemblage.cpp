#include <catch2/catch.hpp>

#include <Eigen/SVD>
#include <cmath>

#include "incompat/assemblage.hpp"

using namespace incompat;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Independent operator-norm route for oracle checks: largest singular value
// computed by Jacobi SVD instead of the self-adjoint eigensolver.
double svd_operator_norm(const CMatrix& m) {
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace

TEST_CASE("pauli assemblage along z gives the z eigenprojectors", "[assemblage]") {
    const Assemblage a = make_pauli_assemblage({{{0, 0, 1}}});
    CMatrix p0(2, 2), p1(2, 2);
    p0 << 1, 0, 0, 0;
    p1 << 0, 0, 0, 1;
    REQUIRE(max_abs(a.effect(0, 0) - p0) < 1e-14);
    REQUIRE(max_abs(a.effect(0, 1) - p1) < 1e-14);
}

TEST_CASE("pauli assemblage along x, y, z matches the Pauli operators", "[assemblage]") {
    const Assemblage a = pauli_xyz();
    REQUIRE(a.settings() == 3);
    const CMatrix paulis[3] = {pauli_x(), pauli_y(), pauli_z()};
    for (int x = 0; x < 3; ++x) {
        REQUIRE(max_abs(a.effect(x, 0) - 0.5 * (identity_c(2) + paulis[x])) < 1e-14);
        REQUIRE(max_abs(a.effect(x, 1) - 0.5 * (identity_c(2) - paulis[x])) < 1e-14);
    }
}

TEST_CASE("xzh assemblage puts the Hadamard direction last", "[assemblage]") {
    const Assemblage a = xzh();
    const double s = 1.0 / std::sqrt(2.0);
    REQUIRE(max_abs(a.effect(2, 0) - 0.5 * (identity_c(2) + s * (pauli_x() + pauli_z()))) < 1e-14);
}

TEST_CASE("non-unit axis is rejected", "[assemblage]") {
    REQUIRE_THROWS_AS(make_pauli_assemblage({{{0, 0, 1.1}}}), std::invalid_argument);
}

TEST_CASE("depolarize at eta 1 and eta 0", "[assemblage]") {
    const Assemblage a = random_assemblage(2, 3, 2, 42);
    const Assemblage full = depolarize(a, Visibility(1.0));
    for (int x = 0; x < 3; ++x) {
        for (int out = 0; out < 2; ++out) {
            REQUIRE(max_abs(full.effect(x, out) - a.effect(x, out)) < 1e-14);
        }
    }
    const Assemblage noisy = depolarize(a, Visibility(0.0));
    for (int x = 0; x < 3; ++x) {
        for (int out = 0; out < 2; ++out) {
            const CMatrix expected =
                a.effect(x, out).trace().real() / 2.0 * identity_c(2);
            REQUIRE(max_abs(noisy.effect(x, out) - expected) < 1e-14);
        }
    }
}

TEST_CASE("depolarize halves the Bloch part", "[assemblage]") {
    const Assemblage a = make_pauli_assemblage({{{0, 0, 1}}});
    const Assemblage half = depolarize(a, Visibility(0.5));
    const CMatrix expected = 0.5 * (identity_c(2) + 0.5 * pauli_z());
    REQUIRE(max_abs(half.effect(0, 0) - expected) < 1e-14);
}

TEST_CASE("depolarize composes multiplicatively", "[assemblage]") {
    const Assemblage a = random_assemblage(3, 2, 3, 7);
    const Assemblage twice = depolarize(depolarize(a, Visibility(0.8)), Visibility(0.5));
    const Assemblage once = depolarize(a, Visibility(0.4));
    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            REQUIRE(max_abs(twice.effect(x, out) - once.effect(x, out)) < 1e-10);
        }
    }
}

TEST_CASE("assemblage norm of projective measurements counts projectors", "[assemblage]") {
    REQUIRE(assemblage_norm(make_pauli_assemblage({{{0, 0, 1}}})) == Approx(2.0).margin(1e-12));
    REQUIRE(assemblage_norm(pauli_xyz()) == Approx(6.0).margin(1e-12));
    const std::vector<std::vector<CMatrix>> zero = {{CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)}};
    REQUIRE(assemblage_norm(zero) == 0.0);
}

TEST_CASE("assemblage distance basics", "[assemblage]") {
    const Assemblage a = random_assemblage(2, 3, 2, 11);
    REQUIRE(assemblage_distance(a, a) == Approx(0.0).margin(1e-12));

    const double eta = 0.6;
    const Assemblage noisy = depolarize(a, Visibility(eta));
    double expected = 0.0;
    for (int x = 0; x < a.settings(); ++x) {
        for (int out = 0; out < a.outcomes(x); ++out) {
            const CMatrix m = a.effect(x, out);
            expected += (1.0 - eta) * operator_norm(m - m.trace().real() / 2.0 * identity_c(2));
        }
    }
    REQUIRE(assemblage_distance(a, noisy) == Approx(expected).margin(1e-10));
}

TEST_CASE("assemblage distance matches an SVD recomputation on random pairs", "[assemblage]") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Assemblage a = random_assemblage(2, 2, 2, seed);
        const Assemblage b = random_assemblage(2, 2, 2, seed + 100);
        double oracle = 0.0;
        for (int x = 0; x < 2; ++x) {
            for (int out = 0; out < 2; ++out) {
                oracle += svd_operator_norm(a.effect(x, out) - b.effect(x, out));
            }
        }
        REQUIRE(assemblage_distance(a, b) == Approx(oracle).margin(1e-9));
    }
}

TEST_CASE("assemblage distance rejects shape mismatches", "[assemblage]") {
    const Assemblage a = random_assemblage(2, 2, 2, 1);
    const Assemblage b = random_assemblage(2, 3, 2, 1);
    REQUIRE_THROWS_AS(assemblage_distance(a, b), std::invalid_argument);
}

TEST_CASE("assemblage norm satisfies triangle inequality and homogeneity", "[assemblage]") {
    for (std::uint64_t seed = 20; seed < 23; ++seed) {
        const Assemblage a = random_assemblage(2, 2, 2, seed);
        const Assemblage b = random_assemblage(2, 2, 2, seed + 50);
        const Assemblage c = random_assemblage(2, 2, 2, seed + 90);
        REQUIRE(assemblage_distance(a, c) <=
                assemblage_distance(a, b) + assemblage_distance(b, c) + 1e-9);

        std::vector<std::vector<CMatrix>> scaled, plain;
        for (int x = 0; x < 2; ++x) {
            scaled.emplace_back();
            plain.emplace_back();
            for (int out = 0; out < 2; ++out) {
                plain.back().push_back(a.effect(x, out) - b.effect(x, out));
                scaled.back().push_back(-2.5 * (a.effect(x, out) - b.effect(x, out)));
            }
        }
        REQUIRE(assemblage_norm(scaled) == Approx(2.5 * assemblage_norm(plain)).margin(1e-9));
    }
}

TEST_CASE("steering map on known effects", "[assemblage]") {
    // I/2 -> I/4, (I + sigma_z)/2 -> (I + sigma_z)/4, (I + sigma_y)/2 -> (I - sigma_y)/4.
    const Assemblage a = make_pauli_assemblage({{{0, 1, 0}}, {{0, 0, 1}}});
    const auto steer = steering_assemblage(a);
    REQUIRE(max_abs(steer.states()[0][0].mat() - 0.25 * (identity_c(2) - pauli_y())) < 1e-14);
    REQUIRE(max_abs(steer.states()[1][0].mat() - 0.25 * (identity_c(2) + pauli_z())) < 1e-14);

    std::vector<HermitianOp> trivial_effects;
    trivial_effects.emplace_back(CMatrix(0.5 * identity_c(2)));
    trivial_effects.emplace_back(CMatrix(0.5 * identity_c(2)));
    const Assemblage trivial(std::vector<Measurement>{Measurement(std::move(trivial_effects))});
    const auto steer_trivial = steering_assemblage(trivial);
    REQUIRE(max_abs(steer_trivial.states()[0][0].mat() - 0.25 * identity_c(2)) < 1e-14);
}

TEST_CASE("steering map marginals do not depend on the setting", "[assemblage]") {
    const Assemblage a = random_assemblage(3, 4, 3, 5);
    const auto steer = steering_assemblage(a);
    const int d = a.dim();
    CMatrix first = CMatrix::Zero(d, d);
    for (const auto& s : steer.states()[0]) first += s.mat();
    for (int x = 1; x < steer.settings(); ++x) {
        CMatrix marg = CMatrix::Zero(d, d);
        for (const auto& s : steer.states()[static_cast<std::size_t>(x)]) marg += s.mat();
        REQUIRE(max_abs(marg - first) < 1e-12);
    }
}

TEST_CASE("random assemblage is deterministic in the seed and valid", "[assemblage]") {
    const Assemblage a = random_assemblage(2, 2, 2, 7);
    const Assemblage b = random_assemblage(2, 2, 2, 7);
    for (int x = 0; x < 2; ++x) {
        for (int out = 0; out < 2; ++out) {
            REQUIRE(max_abs(a.effect(x, out) - b.effect(x, out)) == 0.0);
        }
    }
    const Assemblage c = random_assemblage(2, 2, 2, 8);
    REQUIRE(assemblage_distance(a, c) > 1e-3);

    // Construction re-validates, but check the invariants explicitly once.
    for (int x = 0; x < 2; ++x) {
        CMatrix sum = CMatrix::Zero(2, 2);
        for (int out = 0; out < 2; ++out) {
            REQUIRE(min_eigenvalue(a.effect(x, out)) >= -1e-9);
            sum += a.effect(x, out);
        }
        REQUIRE(max_abs(sum - identity_c(2)) < 1e-9);
    }
    REQUIRE_THROWS_AS(random_assemblage(1, 2, 2, 1), std::invalid_argument);
}

TEST_CASE("value type constructors enforce their invariants", "[assemblage]") {
    CMatrix not_square(2, 3);
    not_square.setZero();
    REQUIRE_THROWS_AS(HermitianOp(not_square), std::invalid_argument);

    CMatrix not_hermitian(2, 2);
    not_hermitian << 0, 1, 0, 0;
    REQUIRE_THROWS_AS(HermitianOp(not_hermitian), std::invalid_argument);

    // Effects that do not sum to the identity.
    std::vector<HermitianOp> incomplete;
    incomplete.emplace_back(CMatrix(0.5 * identity_c(2)));
    incomplete.emplace_back(CMatrix(0.4 * identity_c(2)));
    REQUIRE_THROWS_AS(Measurement(std::move(incomplete)), std::invalid_argument);

    // A non-PSD effect pair that still sums to the identity.
    std::vector<HermitianOp> negative;
    negative.emplace_back(CMatrix(0.5 * identity_c(2) + pauli_z()));
    negative.emplace_back(CMatrix(0.5 * identity_c(2) - pauli_z()));
    REQUIRE_THROWS_AS(Measurement(std::move(negative)), std::invalid_argument);

    REQUIRE_THROWS_AS(Visibility(-0.1), std::invalid_argument);
    REQUIRE_THROWS_AS(Visibility(1.1), std::invalid_argument);

    // Setting-dependent marginals are rejected.
    std::vector<std::vector<HermitianOp>> states;
    states.push_back({HermitianOp(CMatrix(0.5 * identity_c(2)))});
    states.push_back({HermitianOp(CMatrix(0.25 * identity_c(2)))});
    REQUIRE_THROWS_AS(SubnormalizedStateAssemblage(std::move(states)), std::invalid_argument);
}
