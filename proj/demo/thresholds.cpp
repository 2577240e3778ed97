// Prints the threshold profile of the two builtin assemblages, reproducing
// the reference visibilities across the inclusion chain.

#include <cstdio>

#include "incompat/hierarchy.hpp"

int main() {
    using namespace incompat;
    const ThresholdProfile paulis =
        threshold_profile(pauli_xyz(), 2, {}, conic::kDefaultSolveTol, "pauli-xyz");
    std::printf("%s\n", format_profile_table(paulis).c_str());

    const ThresholdProfile hadamard =
        threshold_profile(xzh(), 2, {xzh_reference_pre()}, conic::kDefaultSolveTol, "xzh");
    std::printf("%s\n", format_profile_table(hadamard).c_str());
    return 0;
}
