// SPDX-License-Identifier: Apache-2.0
#include "vacot/packing.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

namespace vacot {

std::vector<PackedBatch> pack_lengths(const std::vector<std::size_t>& lengths, std::size_t budget)
{
    if (budget == 0)
        throw Error(Errc::InvalidConfig, "packing budget must be positive");
    std::vector<PackedBatch> out;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        auto const len = lengths[i];
        if (len > budget)
            throw Error(Errc::SequenceExceedsBudget,
                        fmt::format("sequence {} has {} tokens, budget is {}", i, len, budget), i);
        if (out.empty() || out.back().total_tokens + len > budget)
            out.emplace_back();
        out.back().indices.push_back(i);
        out.back().total_tokens += len;
    }
    return out;
}

std::vector<PackedBatch> pack(const std::vector<TrainingSequence>& sequences, std::size_t budget)
{
    std::vector<std::size_t> lengths;
    lengths.reserve(sequences.size());
    for (auto const& s : sequences)
        lengths.push_back(s.total_tokens);
    return pack_lengths(lengths, budget);
}

nlohmann::json to_json(const PackedBatch& batch)
{
    return {{"indices", batch.indices}, {"total_tokens", batch.total_tokens}};
}

} // namespace vacot
