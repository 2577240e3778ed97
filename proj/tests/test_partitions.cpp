#include <catch2/catch.hpp>

#include "incompat/partitions.hpp"

using namespace incompat;

TEST_CASE("partitions of 4 labels into at most 2 blocks", "[partitions]") {
    const auto parts = enumerate_partitions(4, 2);
    REQUIRE(parts.size() == 8);

    // Frozen order: lexicographic in the restricted growth strings.
    const std::vector<std::vector<std::vector<int>>> expected = {
        {{0, 1, 2, 3}},
        {{0, 1, 2}, {3}},
        {{0, 1, 3}, {2}},
        {{0, 1}, {2, 3}},
        {{0, 2, 3}, {1}},
        {{0, 2}, {1, 3}},
        {{0, 3}, {1, 2}},
        {{0}, {1, 2, 3}},
    };
    for (std::size_t i = 0; i < expected.size(); ++i) {
        REQUIRE(parts[i].blocks == expected[i]);
    }

    // Order-stable across calls.
    const auto again = enumerate_partitions(4, 2);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        REQUIRE(parts[i].blocks == again[i].blocks);
    }
}

TEST_CASE("partition counts for small cases", "[partitions]") {
    REQUIRE(enumerate_partitions(3, 2).size() == 4);
    REQUIRE(enumerate_partitions(3, 3).size() == 5);  // Bell number B_3
    REQUIRE(enumerate_partitions(1, 1).size() == 1);
    REQUIRE(enumerate_partitions(5, 1).size() == 1);
    REQUIRE(enumerate_partitions(4, 4).size() == 15);  // B_4
}

TEST_CASE("partition block lookup and printing", "[partitions]") {
    const auto parts = enumerate_partitions(3, 2);
    const PartitionCollection& pairing = parts[1];  // {0,1}{2}
    REQUIRE(pairing.block_of(0) == 0);
    REQUIRE(pairing.block_of(1) == 0);
    REQUIRE(pairing.block_of(2) == 1);
    REQUIRE(pairing.to_string() == "{1,2}{3}");
    REQUIRE_THROWS_AS(pairing.block_of(5), std::invalid_argument);
}

TEST_CASE("partition enumeration rejects bad arguments", "[partitions]") {
    REQUIRE_THROWS_AS(enumerate_partitions(3, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(enumerate_partitions(3, 4), std::invalid_argument);
}
