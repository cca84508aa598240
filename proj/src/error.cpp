// SPDX-License-Identifier: Apache-2.0
#include "vacot/error.hpp"

namespace vacot {

std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::UnknownCheckType: return "UnknownCheckType";
    case Errc::MissingField: return "MissingField";
    case Errc::MalformedRegion: return "MalformedRegion";
    case Errc::MalformedReference: return "MalformedReference";
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::EmptyPlan: return "EmptyPlan";
    case Errc::EmptyPrompt: return "EmptyPrompt";
    case Errc::InvalidFeedback: return "InvalidFeedback";
    case Errc::BackendFailure: return "BackendFailure";
    case Errc::PlanInvalid: return "PlanInvalid";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InvalidImage: return "InvalidImage";
    case Errc::EmbedderFailure: return "EmbedderFailure";
    case Errc::UnknownExtraScorer: return "UnknownExtraScorer";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::NonFiniteLogProb: return "NonFiniteLogProb";
    case Errc::ScheduleMismatch: return "ScheduleMismatch";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::DivergenceDetected: return "DivergenceDetected";
    case Errc::AnnotatorUnavailable: return "AnnotatorUnavailable";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::TokenizerFailure: return "TokenizerFailure";
    case Errc::SequenceExceedsBudget: return "SequenceExceedsBudget";
    case Errc::TransportFailure: return "TransportFailure";
    case Errc::MalformedInput: return "MalformedInput";
    case Errc::IoFailure: return "IoFailure";
    }
    return "UnknownError";
}

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> index):
    std::runtime_error(message), code_(code), index_(index)
{
}

} // namespace vacot
