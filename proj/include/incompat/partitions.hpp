#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace incompat {

/// A partition of the setting labels {0,...,m-1} into at most n disjoint
/// blocks. Blocks are sorted internally and listed by smallest element.
struct PartitionCollection {
    std::vector<std::vector<int>> blocks;

    int block_count() const { return static_cast<int>(blocks.size()); }

    int block_of(int x) const {
        for (int j = 0; j < block_count(); ++j) {
            for (int e : blocks[static_cast<std::size_t>(j)]) {
                if (e == x) return j;
            }
        }
        throw std::invalid_argument("PartitionCollection: label not covered");
    }

    std::string to_string() const {  // e.g. "{1,2}{3}" with 1-based labels
        std::string s;
        for (const auto& b : blocks) {
            s += '{';
            for (std::size_t i = 0; i < b.size(); ++i) {
                if (i) s += ',';
                s += std::to_string(b[i] + 1);
            }
            s += '}';
        }
        return s;
    }
};

/// All set partitions of {0,...,m-1} with at most n blocks, in lexicographic
/// order of their restricted growth strings. The single-block partition comes
/// first and is kept even though it is redundant for membership questions.
inline std::vector<PartitionCollection> enumerate_partitions(int m, int n) {
    if (n < 1 || n > m) throw std::invalid_argument("enumerate_partitions: need 1 <= n <= m");
    std::vector<PartitionCollection> out;
    std::vector<int> rgs(static_cast<std::size_t>(m), 0);

    auto emit = [&] {
        int nblocks = 0;
        for (int v : rgs) nblocks = std::max(nblocks, v + 1);
        if (nblocks > n) return;
        PartitionCollection pc;
        pc.blocks.assign(static_cast<std::size_t>(nblocks), {});
        for (int x = 0; x < m; ++x) {
            pc.blocks[static_cast<std::size_t>(rgs[static_cast<std::size_t>(x)])].push_back(x);
        }
        out.push_back(std::move(pc));
    };

    // Odometer over restricted growth strings: rgs[0] = 0 and
    // rgs[i] <= 1 + max(rgs[0..i-1]).
    while (true) {
        emit();
        int i = m - 1;
        for (; i > 0; --i) {
            int prefix_max = 0;
            for (int j = 0; j < i; ++j) {
                prefix_max = std::max(prefix_max, rgs[static_cast<std::size_t>(j)]);
            }
            if (rgs[static_cast<std::size_t>(i)] < prefix_max + 1 &&
                rgs[static_cast<std::size_t>(i)] < n - 1) {
                ++rgs[static_cast<std::size_t>(i)];
                for (int j = i + 1; j < m; ++j) rgs[static_cast<std::size_t>(j)] = 0;
                break;
            }
        }
        if (i == 0) break;
    }
    return out;
}

}  // namespace incompat
