// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/context.hpp"
#include "vacot/transport.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>

namespace vacot {

/// External VLM that writes ground-truth plans and evaluations.
class AnnotatorClient {
public:
    virtual ~AnnotatorClient() = default;

    virtual Checklist annotate_plan(const Prompt& prompt, const VisualContext& context) = 0;
    virtual EvalFeedback annotate_eval(const Prompt& prompt, const VisualContext& context, const Checklist& plan,
                                       const ImageRef& negative, const ImageRef& final_gt) = 0;
};

/// Produces lower-quality images with varied failure modes. Deterministic per seed.
class DegradedGenerator {
public:
    virtual ~DegradedGenerator() = default;

    virtual ImageRef generate_negative(const Prompt& prompt, const VisualContext& context, const ImageRef& final_gt,
                                       std::uint64_t variation_seed) = 0;
};

struct AnnotatorPromptIds {
    std::string plan = "visual_plan_v1";
    std::string eval = "evaluation_correction_v1";
};

/// Annotator speaking the service protocol:
///   request  {"op": "plan"|"eval", "prompt", "images": [...], "plan"?, "negative"?, "gt"?, "system_prompt_id"}
///   response {"ok": bool, "document": "<checklist or feedback document>", "error"?: str}
/// Transport failures and ok=false raise AnnotatorUnavailable; documents that
/// do not parse under the checklist/feedback schema raise SchemaViolation.
class ServiceAnnotator final : public AnnotatorClient {
public:
    explicit ServiceAnnotator(JsonTransport transport, AnnotatorPromptIds prompt_ids = {});

    Checklist annotate_plan(const Prompt& prompt, const VisualContext& context) override;
    EvalFeedback annotate_eval(const Prompt& prompt, const VisualContext& context, const Checklist& plan,
                               const ImageRef& negative, const ImageRef& final_gt) override;

    static nlohmann::json plan_request(const Prompt& prompt, const VisualContext& context, const std::string& prompt_id);
    static nlohmann::json eval_request(const Prompt& prompt, const VisualContext& context, const Checklist& plan,
                                       const ImageRef& negative, const ImageRef& final_gt,
                                       const std::string& prompt_id);

private:
    std::string fetch_document(const nlohmann::json& request);

    JsonTransport transport_;
    AnnotatorPromptIds prompt_ids_;
};

/// Record/replay store for annotator exchanges, keyed by the content hash of
/// the canonical request. Safe for concurrent use on distinct keys; each entry
/// is one file, written atomically.
class AnnotationCache {
public:
    explicit AnnotationCache(std::filesystem::path dir);

    static std::string key(const nlohmann::json& request);

    std::optional<nlohmann::json> lookup(const nlohmann::json& request) const;
    void store(const nlohmann::json& request, const nlohmann::json& response);

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path entry_path(const std::string& key) const;

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, nlohmann::json> memo_;
};

enum class CacheMode {
    ReadWrite,  // miss -> upstream, then record
    ReplayOnly, // miss -> AnnotatorUnavailable, no upstream call
};

/// Serves hits from the cache; successful upstream responses are recorded.
JsonTransport caching_transport(JsonTransport upstream, std::shared_ptr<AnnotationCache> cache, CacheMode mode);

/// Deterministic stand-in for the annotator service.
///
/// Plans: one item per context image; "style of image_k" yields a Style item,
/// otherwise Identity, described by the noun phrase before "in image_k" when
/// the prompt has one. Evaluations: all satisfied when negative == gt,
/// otherwise at least one violated item with an edit instruction.
JsonTransport mock_annotator_service();

/// Vector images: gt + scale * N(0, I); other images: blob of gt bytes with a
/// seeded scramble.
class MockDegrader final : public DegradedGenerator {
public:
    explicit MockDegrader(double scale = 0.5): scale_(scale) {}

    ImageRef generate_negative(const Prompt& prompt, const VisualContext& context, const ImageRef& final_gt,
                               std::uint64_t variation_seed) override;

private:
    double scale_;
};

} // namespace vacot
