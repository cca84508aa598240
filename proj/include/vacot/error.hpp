// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vacot {

/// Domain error kinds. The CLI prints these names verbatim.
enum class Errc {
    // consistency plan
    UnknownCheckType,
    MissingField,
    MalformedRegion,
    MalformedReference,
    MalformedDocument,
    EmptyPlan,
    EmptyPrompt,
    InvalidFeedback,
    // inference engine
    BackendFailure,
    PlanInvalid,
    InvalidSpec,
    InvalidConfig,
    InvalidImage,
    // reward
    EmbedderFailure,
    UnknownExtraScorer,
    EmptyInput,
    // grpo
    GroupTooSmall,
    NonFiniteLogProb,
    ScheduleMismatch,
    EmptyBatch,
    DivergenceDetected,
    // dataset
    AnnotatorUnavailable,
    SchemaViolation,
    TokenizerFailure,
    SequenceExceedsBudget,
    // plumbing
    TransportFailure,
    MalformedInput,
    IoFailure,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::optional<std::size_t> index = std::nullopt);

    Errc code() const noexcept { return code_; }
    std::string_view name() const noexcept { return errc_name(code_); }

    /// Offending item / sequence / iteration index, when the error names one.
    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    Errc code_;
    std::optional<std::size_t> index_;
};

} // namespace vacot
