#include <catch2/catch.hpp>

#include <cmath>

#include "incompat/jm.hpp"

using namespace incompat;

namespace {

Assemblage xz() { return make_pauli_assemblage({{{1, 0, 0}}, {{0, 0, 1}}}); }

double sign_of(int outcome) { return outcome == 0 ? 1.0 : -1.0; }

// The four-outcome parent (1 + eta (i sigma_x + j sigma_z)) / 4, which
// reproduces the depolarized x/z pair exactly and is PSD up to eta = 1/sqrt2.
ParentPovm xz_analytic_parent(double eta) {
    ParentPovm parent;
    parent.settings = {0, 1};
    parent.dim = 2;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            parent.outcome_labels.push_back({i, j});
            parent.effects.push_back(
                0.25 * (identity_c(2) + eta * (sign_of(i) * pauli_x() + sign_of(j) * pauli_z())));
        }
    }
    return parent;
}

// Outcome-relabeled copy of an assemblage: flips the outcomes of measurement `x`.
Assemblage flip_outcomes(const Assemblage& a, int x) {
    std::vector<Measurement> ms;
    for (int i = 0; i < a.settings(); ++i) {
        std::vector<HermitianOp> effects;
        for (int out = 0; out < a.outcomes(i); ++out) {
            const int src = (i == x) ? a.outcomes(i) - 1 - out : out;
            effects.emplace_back(a.effect(i, src));
        }
        ms.emplace_back(std::move(effects));
    }
    return Assemblage(std::move(ms));
}

}  // namespace

TEST_CASE("x/z pair becomes incompatible above 1/sqrt2", "[jm]") {
    const double threshold = 1.0 / std::sqrt(2.0);
    const Visibility vis = jm_visibility(xz());
    REQUIRE(vis.eta() == Approx(threshold).margin(1e-4));

    auto [ok_below, parent_below] = jm_feasible(depolarize(xz(), Visibility(0.70)));
    REQUIRE(ok_below);
    REQUIRE(parent_below.has_value());
    auto [ok_above, parent_above] = jm_feasible(depolarize(xz(), Visibility(0.72)));
    REQUIRE_FALSE(ok_above);
    REQUIRE_FALSE(parent_above.has_value());
}

TEST_CASE("analytic x/z parent at the threshold has zero residual", "[jm]") {
    const double eta = 1.0 / std::sqrt(2.0);
    const Assemblage noisy = depolarize(xz(), Visibility(eta));
    REQUIRE(verify_parent(noisy, {0, 1}, xz_analytic_parent(eta)) <= 1e-12);
}

TEST_CASE("commuting projective measurements are jointly measurable", "[jm]") {
    const Assemblage a = make_pauli_assemblage({{{0, 0, 1}}, {{0, 0, 1}}});
    auto [ok, parent] = jm_feasible(a);
    REQUIRE(ok);
    REQUIRE(verify_parent(a, {0, 1}, *parent) <= 1e-6);
}

TEST_CASE("single settings are trivially jointly measurable", "[jm]") {
    const Assemblage a = pauli_xyz();
    for (int x = 0; x < 3; ++x) {
        auto [ok, parent] = jm_feasible(a, {x});
        REQUIRE(ok);
    }
    REQUIRE(jm_visibility(a, {1}).eta() == Approx(1.0).margin(1e-5));
}

TEST_CASE("three Pauli measurements have threshold 1/sqrt3", "[jm]") {
    // Oracle: the eight-outcome parent (1 + eta sum_s sign_s sigma_s)/8 is an
    // exact parent at eta = 1/sqrt3, where its smallest eigenvalue hits zero.
    const double eta = 1.0 / std::sqrt(3.0);
    const Assemblage noisy = depolarize(pauli_xyz(), Visibility(eta));
    ParentPovm parent;
    parent.settings = {0, 1, 2};
    parent.dim = 2;
    const CMatrix paulis[3] = {pauli_x(), pauli_y(), pauli_z()};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            for (int k = 0; k < 2; ++k) {
                parent.outcome_labels.push_back({i, j, k});
                CMatrix effect = identity_c(2);
                effect += eta * (sign_of(i) * paulis[0] + sign_of(j) * paulis[1] +
                                 sign_of(k) * paulis[2]);
                parent.effects.push_back(effect / 8.0);
                REQUIRE(min_eigenvalue(parent.effects.back()) >= -1e-12);
            }
        }
    }
    REQUIRE(verify_parent(noisy, {0, 1, 2}, parent) <= 1e-12);

    REQUIRE(jm_visibility(pauli_xyz()).eta() == Approx(eta).margin(1e-4));
}

TEST_CASE("witnesses from feasibility replay within the margin", "[jm]") {
    for (std::uint64_t seed : {3u, 14u}) {
        const Assemblage a = depolarize(random_assemblage(2, 3, 2, seed), Visibility(0.45));
        auto [ok, parent] = jm_feasible(a);
        if (ok) {
            REQUIRE(verify_parent(a, {0, 1, 2}, *parent) <= 1e-6);
        }
    }
}

TEST_CASE("visibility is monotone under taking more settings", "[jm]") {
    const Assemblage a = random_assemblage(2, 3, 2, 91);
    const double pair = jm_visibility(a, {0, 1}).eta();
    const double full = jm_visibility(a, {0, 1, 2}).eta();
    REQUIRE(pair >= full - 1e-6);
    const double single = jm_visibility(a, {0}).eta();
    REQUIRE(single >= pair - 1e-6);
}

TEST_CASE("outcome relabeling leaves the visibility unchanged", "[jm]") {
    const Assemblage a = random_assemblage(2, 2, 2, 55);
    const double base = jm_visibility(a).eta();
    const double flipped = jm_visibility(flip_outcomes(a, 1)).eta();
    REQUIRE(base == Approx(flipped).margin(1e-6));
}

TEST_CASE("heavily depolarized random assemblages are jointly measurable", "[jm]") {
    const Assemblage a = random_assemblage(2, 3, 2, 1);
    REQUIRE(jm_visibility(a).eta() >= 0.1);
    auto [ok, parent] = jm_feasible(depolarize(a, Visibility(0.1)));
    REQUIRE(ok);
}

TEST_CASE("subset arguments are validated", "[jm]") {
    const Assemblage a = pauli_xyz();
    REQUIRE_THROWS_AS(jm_feasible(a, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(jm_feasible(a, {3}), std::invalid_argument);
    REQUIRE_THROWS_AS(jm_visibility(a, {-1}), std::invalid_argument);
}

TEST_CASE("product-projector parent for a commuting pair is exact", "[jm]") {
    // Both measurements are the z eigenprojectors; products of projectors
    // form a parent with outcome tuples (i, j).
    const Assemblage a = make_pauli_assemblage({{{0, 0, 1}}, {{0, 0, 1}}});
    ParentPovm parent;
    parent.settings = {0, 1};
    parent.dim = 2;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            parent.outcome_labels.push_back({i, j});
            parent.effects.push_back(a.effect(0, i) * a.effect(1, j));
        }
    }
    REQUIRE(verify_parent(a, {0, 1}, parent) <= 1e-12);
}
