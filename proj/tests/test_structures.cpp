#include <catch2/catch.hpp>

#include <cmath>

#include "incompat/structures.hpp"

using namespace incompat;

namespace {

const double kPairThreshold = 1.0 / std::sqrt(2.0);  // x/z pair
const double kNwisePauliThreshold = (std::sqrt(2.0) + 1.0) / 3.0;

double sign_of(int outcome) { return outcome == 0 ? 1.0 : -1.0; }

ParentPovm scaled_pair_parent(double weight, double eta, int s, int t, const CMatrix& sig_s,
                              const CMatrix& sig_t) {
    ParentPovm parent;
    parent.settings = {s, t};
    parent.dim = 2;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            parent.outcome_labels.push_back({i, j});
            parent.effects.push_back(
                weight * 0.25 *
                (identity_c(2) + eta * (sign_of(i) * sig_s + sign_of(j) * sig_t)));
        }
    }
    return parent;
}

ParentPovm scaled_single_parent(double weight, int s, const CMatrix& sig_s) {
    ParentPovm parent;
    parent.settings = {s};
    parent.dim = 2;
    parent.outcome_labels = {{0}, {1}};
    parent.effects = {weight * 0.5 * (identity_c(2) + sig_s),
                      weight * 0.5 * (identity_c(2) - sig_s)};
    return parent;
}

// Equal mixture of three terms, each pairing two noisy Pauli measurements
// (at the pair threshold) with the remaining one noise-free. Reconstructs the
// depolarized Pauli triple at eta = (sqrt2 + 1)/3 exactly.
ConvexDecomposition pauli_mixture_decomposition() {
    const double eta2 = kPairThreshold;
    const CMatrix sig[3] = {pauli_x(), pauli_y(), pauli_z()};
    ConvexDecomposition dec;
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    const int rest[3] = {2, 1, 0};
    for (int i = 0; i < 3; ++i) {
        ConvexDecomposition::Term term;
        const int s = pairs[i][0];
        const int t = pairs[i][1];
        term.weight = 1.0 / 3.0;
        if (rest[i] < s) {
            term.partition.blocks = {{rest[i]}, {s, t}};
            term.block_parents.push_back(scaled_single_parent(term.weight, rest[i], sig[rest[i]]));
            term.block_parents.push_back(
                scaled_pair_parent(term.weight, eta2, s, t, sig[s], sig[t]));
        } else {
            term.partition.blocks = {{s, t}, {rest[i]}};
            term.block_parents.push_back(
                scaled_pair_parent(term.weight, eta2, s, t, sig[s], sig[t]));
            term.block_parents.push_back(scaled_single_parent(term.weight, rest[i], sig[rest[i]]));
        }
        dec.terms.push_back(std::move(term));
    }
    return dec;
}

}  // namespace

TEST_CASE("deterministic 2-simulability of the noisy Pauli triple", "[structures]") {
    auto [ok, witness] = sim_det_feasible(depolarize(pauli_xyz(), Visibility(0.70)), 2);
    REQUIRE(ok);
    REQUIRE(witness.has_value());
    REQUIRE(witness->block_count() <= 2);

    auto [ok_above, w2] = sim_det_feasible(depolarize(pauli_xyz(), Visibility(0.72)), 2);
    REQUIRE_FALSE(ok_above);
}

TEST_CASE("x, z, Hadamard triple crosses the deterministic threshold near 0.7654",
          "[structures]") {
    auto [ok, witness] = sim_det_feasible(depolarize(xzh(), Visibility(0.77)), 2);
    REQUIRE_FALSE(ok);
    REQUIRE(sim_det_visibility(xzh(), 2).eta() == Approx(0.7654).margin(1e-3));
}

TEST_CASE("deterministic visibility of the Pauli triple is the pair threshold",
          "[structures]") {
    const auto [vis, witness] = sim_det_visibility_with_witness(pauli_xyz(), 2);
    REQUIRE(vis.eta() == Approx(kPairThreshold).margin(1e-4));
    REQUIRE(witness.block_count() == 2);
}

TEST_CASE("n equal to m makes everything deterministically simulable", "[structures]") {
    const Assemblage a = random_assemblage(2, 3, 2, 17);
    auto [ok, witness] = sim_det_feasible(a, 3);
    REQUIRE(ok);
    REQUIRE(sim_det_visibility(a, 3).eta() == Approx(1.0).margin(1e-6));
}

TEST_CASE("2-wise compatibility threshold of the Pauli triple", "[structures]") {
    auto [ok, dec] = nwise_feasible(depolarize(pauli_xyz(), Visibility(0.80)), 2);
    REQUIRE(ok);
    REQUIRE(dec.has_value());
    REQUIRE(verify_decomposition(depolarize(pauli_xyz(), Visibility(0.80)), *dec).max() <= 1e-6);

    auto [ok_above, dec_above] = nwise_feasible(depolarize(pauli_xyz(), Visibility(0.82)), 2);
    REQUIRE_FALSE(ok_above);

    REQUIRE(nwise_visibility(pauli_xyz(), 2).eta() ==
            Approx(kNwisePauliThreshold).margin(1e-3));
}

TEST_CASE("1-wise compatibility reduces to joint measurability", "[structures]") {
    const Assemblage a = make_pauli_assemblage({{{1, 0, 0}}, {{0, 0, 1}}});
    REQUIRE(nwise_visibility(a, 1).eta() == Approx(kPairThreshold).margin(1e-4));
}

TEST_CASE("n equal to m is n-wise compatible with the singleton partition", "[structures]") {
    const Assemblage a = random_assemblage(2, 3, 2, 23);
    auto [ok, dec] = nwise_feasible(a, 3);
    REQUIRE(ok);
    REQUIRE(verify_decomposition(a, *dec).max() <= 1e-6);
    REQUIRE(nwise_visibility(a, 3).eta() == Approx(1.0).margin(1e-6));
}

TEST_CASE("explicit mixture of pair-noisy Pauli terms reconstructs the threshold point",
          "[structures]") {
    const Assemblage target = depolarize(pauli_xyz(), Visibility(kNwisePauliThreshold));
    const ConvexDecomposition dec = pauli_mixture_decomposition();
    REQUIRE(verify_decomposition(target, dec).max() <= 1e-6);
}

TEST_CASE("single full-weight term from a joint parent verifies", "[structures]") {
    const Assemblage a = depolarize(pauli_xyz(), Visibility(0.5));
    auto [ok, parent] = jm_feasible(a);
    REQUIRE(ok);
    ConvexDecomposition dec;
    ConvexDecomposition::Term term;
    term.partition.blocks = {{0, 1, 2}};
    term.weight = 1.0;
    term.block_parents.push_back(*parent);
    dec.terms.push_back(std::move(term));
    REQUIRE(verify_decomposition(a, dec).max() <= 1e-6);
}

TEST_CASE("dropping the redundant single-block partition does not change the optimum",
          "[structures]") {
    const auto all = enumerate_partitions(3, 2);
    const std::vector<PartitionCollection> pairings_only(all.begin() + 1, all.end());
    REQUIRE(pairings_only.size() == 3);

    const double full = nwise_visibility(pauli_xyz(), 2).eta();
    const double reduced = nwise_visibility_over(pauli_xyz(), pairings_only).eta();
    REQUIRE(full == Approx(reduced).margin(1e-6));

    const Assemblage a = random_assemblage(2, 3, 2, 31);
    const double full_r = nwise_visibility(a, 2).eta();
    const double reduced_r = nwise_visibility_over(a, pairings_only).eta();
    REQUIRE(full_r == Approx(reduced_r).margin(1e-6));
}

TEST_CASE("deterministic simulability implies n-wise compatibility", "[structures]") {
    for (std::uint64_t seed : {41u, 42u}) {
        const Assemblage a = depolarize(random_assemblage(2, 3, 2, seed), Visibility(0.72));
        auto [det_ok, det_witness] = sim_det_feasible(a, 2);
        if (det_ok) {
            auto [nwise_ok, dec] = nwise_feasible(a, 2);
            REQUIRE(nwise_ok);
        }
    }
}

TEST_CASE("visibility chain and monotonicity in n", "[structures]") {
    const Assemblage a = random_assemblage(2, 3, 2, 77);
    const double jm_vis = jm_visibility(a).eta();
    const double det2 = sim_det_visibility(a, 2).eta();
    const double conv1 = nwise_visibility(a, 1).eta();
    const double conv2 = nwise_visibility(a, 2).eta();
    const double conv3 = nwise_visibility(a, 3).eta();
    REQUIRE(det2 >= jm_vis - 1e-6);
    REQUIRE(conv2 >= det2 - 1e-6);
    REQUIRE(conv1 <= conv2 + 1e-6);
    REQUIRE(conv2 <= conv3 + 1e-6);
    REQUIRE(conv1 == Approx(jm_vis).margin(1e-5));
}
