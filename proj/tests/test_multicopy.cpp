#include <catch2/catch.hpp>

#include <cmath>

#include "incompat/multicopy.hpp"
#include "incompat/structures.hpp"

using namespace incompat;

namespace {

Assemblage xz() { return make_pauli_assemblage({{{1, 0, 0}}, {{0, 0, 1}}}); }

// One measurement per copy: G_{(a1,a2)} = M_{a1|1} x M_{a2|2}.
MultiCopyParent product_parent(const Assemblage& a) {
    MultiCopyParent parent;
    parent.n_copies = a.settings();
    parent.copy_dim = a.dim();
    for (int a1 = 0; a1 < a.outcomes(0); ++a1) {
        for (int a2 = 0; a2 < a.outcomes(1); ++a2) {
            parent.outcome_labels.push_back({a1, a2});
            parent.effects.push_back(kron(a.effect(0, a1), a.effect(1, a2)));
        }
    }
    return parent;
}

}  // namespace

TEST_CASE("operator basis is traceless and orthogonal with norm 2", "[multicopy]") {
    for (int d : {2, 3, 4}) {
        const OperatorBasis basis(d);
        REQUIRE(basis.size() == d * d - 1);
        for (int k = 0; k < basis.size(); ++k) {
            REQUIRE(std::abs(basis.element(k).trace()) < 1e-12);
            REQUIRE((basis.element(k) * basis.element(k)).trace().real() == Approx(2.0));
        }
    }
    // At d = 2 the basis is the Pauli triple.
    const OperatorBasis qubit(2);
    REQUIRE((qubit.element(0) - pauli_x()).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((qubit.element(1) - pauli_y()).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((qubit.element(2) - pauli_z()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("cloning bound values", "[multicopy]") {
    REQUIRE(clone_bound(2, 3, 2).eta() == 5.0 / 6.0);
    REQUIRE(clone_bound(2, 3, 1).eta() == 5.0 / 9.0);
    REQUIRE(clone_bound(2, 4, 4).eta() == 1.0);
    REQUIRE(clone_bound(3, 2, 1).eta() == Approx(5.0 / 8.0));
    REQUIRE_THROWS_AS(clone_bound(1, 3, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(clone_bound(2, 3, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(clone_bound(2, 3, 0), std::invalid_argument);
}

TEST_CASE("two-copy threshold of the Pauli triple is sqrt(3)/2", "[multicopy]") {
    REQUIRE(ncopy_visibility(pauli_xyz(), 2).eta() ==
            Approx(std::sqrt(3.0) / 2.0).margin(1e-3));

    auto [ok_below, parent] = ncopy_feasible(depolarize(pauli_xyz(), Visibility(0.86)), 2);
    REQUIRE(ok_below);
    auto [ok_above, none] = ncopy_feasible(depolarize(pauli_xyz(), Visibility(0.88)), 2);
    REQUIRE_FALSE(ok_above);
}

TEST_CASE("witnesses replay against random states", "[multicopy]") {
    const Assemblage noisy = depolarize(pauli_xyz(), Visibility(0.85));
    auto [ok, parent] = ncopy_feasible(noisy, 2);
    REQUIRE(ok);
    REQUIRE(verify_multicopy_statistics(noisy, *parent, 200) <= 1e-6);

    // A visibly corrupted parent must fail the replay.
    MultiCopyParent corrupted = *parent;
    corrupted.effects[0] += 0.02 * kron(pauli_z(), identity_c(2));
    REQUIRE(verify_multicopy_statistics(noisy, corrupted, 200) > 1e-3);
}

TEST_CASE("one measurement per copy handles m = n exactly", "[multicopy]") {
    const Assemblage a = xz();
    REQUIRE(verify_multicopy_statistics(a, product_parent(a), 50) <= 1e-12);
    REQUIRE(ncopy_visibility(a, 2).eta() == Approx(1.0).margin(1e-6));
}

TEST_CASE("single-copy case matches joint measurability", "[multicopy]") {
    REQUIRE(ncopy_visibility(xz(), 1).eta() == Approx(1.0 / std::sqrt(2.0)).margin(1e-4));
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const double eta = 0.40 + 0.02 * static_cast<double>(seed % 20);
        const Assemblage a = depolarize(random_assemblage(2, 3, 2, seed), Visibility(eta));
        const bool jm = jm_feasible(a).first;
        const bool copy1 = ncopy_feasible(a, 1).first;
        REQUIRE(jm == copy1);
    }
}

TEST_CASE("visibility grows with the number of copies", "[multicopy]") {
    const double one = ncopy_visibility(xz(), 1).eta();
    const double two = ncopy_visibility(xz(), 2).eta();
    REQUIRE(one <= two + 1e-6);
    // Three copies for three measurements: noise-free compatibility.
    REQUIRE(ncopy_visibility(pauli_xyz(), 3).eta() == Approx(1.0).margin(1e-5));
}

TEST_CASE("cloning bound lower-bounds the SDP threshold", "[multicopy]") {
    for (std::uint64_t seed : {2u, 9u, 21u}) {
        const Assemblage a = random_assemblage(2, 3, 2, seed);
        REQUIRE(clone_bound(2, 3, 2).eta() <= ncopy_visibility(a, 2).eta() + 1e-4);
    }
}

TEST_CASE("convex-hull threshold never exceeds the two-copy threshold", "[multicopy]") {
    REQUIRE(nwise_visibility(pauli_xyz(), 2).eta() <=
            ncopy_visibility(pauli_xyz(), 2).eta() + 1e-4);
}

TEST_CASE("dimension guard rejects oversized copy counts", "[multicopy]") {
    REQUIRE_THROWS_AS(ncopy_feasible(xz(), 5), std::invalid_argument);
    REQUIRE_THROWS_AS(ncopy_visibility(xz(), 0), std::invalid_argument);
    // An explicit override widens the guard.
    REQUIRE_NOTHROW(ncopy_visibility(xz(), 2, conic::kDefaultSolveTol, 4));
}
