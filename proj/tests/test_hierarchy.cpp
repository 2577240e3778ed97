#include <catch2/catch.hpp>

#include <cmath>

#include "incompat/hierarchy.hpp"

using namespace incompat;

TEST_CASE("threshold profile of the Pauli triple is the strict chain", "[hierarchy]") {
    const ThresholdProfile p = threshold_profile(pauli_xyz(), 2, {}, conic::kDefaultSolveTol,
                                                 "pauli-xyz");
    REQUIRE(p.jm.ok());
    REQUIRE(p.sim_det.ok());
    REQUIRE(p.nwise.ok());
    REQUIRE(p.ncopy.ok());
    REQUIRE(p.clone.ok());
    REQUIRE(*p.jm.eta == Approx(1.0 / std::sqrt(3.0)).margin(1e-4));
    REQUIRE(*p.sim_det.eta == Approx(1.0 / std::sqrt(2.0)).margin(1e-4));
    REQUIRE(*p.nwise.eta == Approx((std::sqrt(2.0) + 1.0) / 3.0).margin(1e-3));
    REQUIRE(*p.ncopy.eta == Approx(std::sqrt(3.0) / 2.0).margin(1e-3));
    REQUIRE(*p.clone.eta == 5.0 / 6.0);

    // Strictly increasing chain at this assemblage.
    REQUIRE(*p.jm.eta < *p.sim_det.eta - 0.01);
    REQUIRE(*p.sim_det.eta < *p.nwise.eta - 0.01);
    REQUIRE(*p.nwise.eta < *p.ncopy.eta - 0.01);
    REQUIRE(*p.clone.eta < *p.ncopy.eta);

    const std::string table = format_profile_table(p);
    REQUIRE(table.find("eta_jm") != std::string::npos);
    REQUIRE(table.find("0.57735") != std::string::npos);
}

TEST_CASE("profile of x/z/H separates deterministic from probabilistic strategies",
          "[hierarchy]") {
    const ThresholdProfile p =
        threshold_profile(xzh(), 2, {xzh_reference_pre()}, conic::kDefaultSolveTol, "xzh");
    REQUIRE(*p.sim_det.eta == Approx(0.7654).margin(1e-3));
    REQUIRE(p.sim_fixed.ok());
    REQUIRE(*p.sim_fixed.eta >= 0.8150 - 1e-4);
    REQUIRE(*p.sim_fixed.eta - *p.sim_det.eta > 0.04);
}

TEST_CASE("single measurement profiles are trivial", "[hierarchy]") {
    const Assemblage single = make_pauli_assemblage({{{0, 0, 1}}});
    const ThresholdProfile p = threshold_profile(single, 1);
    REQUIRE(*p.jm.eta == Approx(1.0).margin(1e-5));
    REQUIRE(*p.sim_det.eta == Approx(1.0).margin(1e-5));
    REQUIRE(*p.sim_fixed.eta == Approx(1.0).margin(1e-5));
    REQUIRE(*p.nwise.eta == Approx(1.0).margin(1e-5));
    REQUIRE(*p.ncopy.eta == Approx(1.0).margin(1e-5));
    REQUIRE(*p.clone.eta == 1.0);
}

TEST_CASE("fuzz over random assemblages reports no violations", "[hierarchy]") {
    const FuzzReport report = hierarchy_fuzz(2, 3, 2, 2, 3, 501);
    REQUIRE(report.violations.empty());
    REQUIRE(report.inconclusive.empty());
    REQUIRE(report.profiles.size() == 3);
    for (const auto& p : report.profiles) {
        REQUIRE(p.jm.ok());
        REQUIRE(*p.jm.eta >= *p.clone.eta * 0.0);  // entries all present
    }
}

TEST_CASE("fuzz at n = 1 respects the cloning bound on joint measurability", "[hierarchy]") {
    const FuzzReport report = hierarchy_fuzz(2, 2, 2, 1, 3, 777);
    REQUIRE(report.violations.empty());
    const double bound = clone_bound(2, 2, 1).eta();
    REQUIRE(bound == Approx(2.0 / 3.0));
    REQUIRE(report.min_jm().has_value());
    REQUIRE(*report.min_jm() >= bound - 1e-4);
}

TEST_CASE("empty fuzz gives an empty report", "[hierarchy]") {
    const FuzzReport report = hierarchy_fuzz(2, 3, 2, 2, 0, 1);
    REQUIRE(report.profiles.empty());
    REQUIRE(report.violations.empty());
    REQUIRE_THROWS_AS(hierarchy_fuzz(2, 3, 2, 2, -1, 1), std::invalid_argument);
}

TEST_CASE("profile argument validation", "[hierarchy]") {
    REQUIRE_THROWS_AS(threshold_profile(pauli_xyz(), 0), std::invalid_argument);
    REQUIRE_THROWS_AS(threshold_profile(pauli_xyz(), 4), std::invalid_argument);
}
