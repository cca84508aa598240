// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/annotator.hpp"
#include "vacot/context.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string_view>
#include <variant>

namespace vacot {

/// Unannotated (prompt, context, ground-truth output) example.
struct RawTriple {
    Prompt prompt;
    VisualContext context;
    ImageRef final_gt;

    bool operator==(const RawTriple&) const = default;
};

struct PlanningSample {
    Prompt prompt;
    VisualContext context;
    Checklist plan_gt;
    ImageRef final_gt;

    bool operator==(const PlanningSample&) const = default;
};

enum class CorrectionKind { Suboptimal, Perfect };

std::string_view to_string(CorrectionKind kind) noexcept;

/// Suboptimal: `negative` is a degraded image and `eval_gt` is the annotator's
/// critique. Perfect: `negative` equals `final_gt` and `eval_gt` is the
/// all-satisfied feedback.
struct CorrectionSample {
    CorrectionKind kind = CorrectionKind::Suboptimal;
    Prompt prompt;
    VisualContext context;
    Checklist plan;
    ImageRef negative;
    EvalFeedback eval_gt;
    ImageRef final_gt;

    bool operator==(const CorrectionSample&) const = default;
};

using TrainingSample = std::variant<PlanningSample, CorrectionSample>;

/// A sample that could not be annotated. `stage` is "plan" or "eval".
struct QuarantineRecord {
    std::size_t index = 0;
    std::string stage;
    std::string error;
    std::string reason;

    bool operator==(const QuarantineRecord&) const = default;
};

struct BuildOptions {
    std::size_t concurrency = 1; // parallel annotator requests
};

struct PlanningBuild {
    std::vector<PlanningSample> samples; // input order, quarantined entries removed
    std::vector<QuarantineRecord> quarantine;
};

/// Annotates every triple. AnnotatorUnavailable and SchemaViolation quarantine
/// the sample; any other error propagates. Output order is independent of
/// `concurrency`.
PlanningBuild build_planning(const std::vector<RawTriple>& triples, AnnotatorClient& annotator,
                             const BuildOptions& options = {});

struct CorrectionOptions {
    double perfect_fraction = 0.2; // probability of also emitting a Perfect sample
    std::uint64_t seed = 0;
    std::size_t concurrency = 1;
};

struct CorrectionBuild {
    std::vector<CorrectionSample> samples; // per source: Suboptimal, then Perfect when drawn
    std::vector<QuarantineRecord> quarantine;
};

/// Suboptimal samples keep the annotator's verdict as returned.
CorrectionBuild build_correction(const std::vector<PlanningSample>& planning, DegradedGenerator& degrader,
                                 AnnotatorClient& annotator, const CorrectionOptions& options = {});

// Corpus records, one JSON object per line:
//   {"kind": "raw", "prompt", "context": [...], "final_gt"}
//   {"kind": "planning", "prompt", "context", "plan", "final_gt"}
//   {"kind": "correction_suboptimal"|"correction_perfect", "prompt", "context", "plan", "negative", "eval", "final_gt"}
nlohmann::json to_json(const RawTriple& triple);
nlohmann::json to_json(const PlanningSample& sample);
nlohmann::json to_json(const CorrectionSample& sample);
nlohmann::json to_json(const QuarantineRecord& record);
RawTriple raw_triple_from_json(const nlohmann::json& j);
TrainingSample training_sample_from_json(const nlohmann::json& j);

/// Errors carry the 0-based line number.
std::vector<RawTriple> parse_raw_triples(std::string_view jsonl);
std::vector<TrainingSample> parse_corpus(std::string_view jsonl);

template <class T>
std::string to_jsonl(const std::vector<T>& rows)
{
    std::string out;
    for (auto const& r : rows)
        out += to_json(r).dump() + "\n";
    return out;
}

/// Fine-tuning hyperparameters recorded next to a built corpus.
struct SftMetadata {
    std::string optimizer = "adam";
    double learning_rate = 2e-5;
    int warmup_steps = 500;
    int gpus = 8;
    std::size_t pack_budget = 32000;
};

nlohmann::json to_json(const SftMetadata& meta);

// Training sequences

enum class Modality { Text, Image };

struct TrainingSegment {
    Modality modality = Modality::Text;
    bool need_loss = false;
    std::string text;   // Text segments
    ImageRef image;     // Image segments
    std::size_t token_length = 0;

    bool operator==(const TrainingSegment&) const = default;
};

enum class SampleKind { Planning, CorrectionSuboptimal, CorrectionPerfect };

std::string_view to_string(SampleKind kind) noexcept;
SampleKind parse_sample_kind(std::string_view tag);

struct TrainingSequence {
    SampleKind kind = SampleKind::Planning;
    std::vector<TrainingSegment> segments;
    std::size_t total_tokens = 0;

    bool operator==(const TrainingSequence&) const = default;
};

/// Token count of a text segment. May throw; failures surface as TokenizerFailure.
using Tokenizer = std::function<std::size_t(std::string_view)>;

/// Counts whitespace-separated pieces.
Tokenizer whitespace_tokenizer();

/// Segment layouts (need_loss in brackets):
///   Planning:   T[F] V..[F] plan[T] final_gt[T]
///   Suboptimal: T[F] V..[F] plan[F] negative[F] eval[T] final_gt[T]
///   Perfect:    T[F] V..[F] plan[F] final_gt[F] eval[T]
TrainingSequence to_training_sequence(const TrainingSample& sample, const Tokenizer& tokenizer,
                                      std::size_t image_token_cost = 1024);

nlohmann::json to_json(const TrainingSequence& seq);
TrainingSequence training_sequence_from_json(const nlohmann::json& j);

} // namespace vacot
