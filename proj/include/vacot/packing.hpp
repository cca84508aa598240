// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/dataset.hpp"

namespace vacot {

inline constexpr std::size_t kDefaultPackBudget = 32000;

struct PackedBatch {
    std::vector<std::size_t> indices; // positions in the input sequence list
    std::size_t total_tokens = 0;

    bool operator==(const PackedBatch&) const = default;
};

/// Greedy packing in input order: a sequence joins the current batch while the
/// batch stays within `budget`, otherwise it opens a new one. Throws
/// SequenceExceedsBudget (with the sequence index) when one sequence alone is
/// over budget.
std::vector<PackedBatch> pack(const std::vector<TrainingSequence>& sequences,
                              std::size_t budget = kDefaultPackBudget);

/// Same, from token lengths alone.
std::vector<PackedBatch> pack_lengths(const std::vector<std::size_t>& lengths,
                                      std::size_t budget = kDefaultPackBudget);

nlohmann::json to_json(const PackedBatch& batch);

} // namespace vacot
