// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/reward.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>

namespace vacot {

/// Deterministic scorer suite for tests and desk-scale runs.
///
/// The detector returns a full-frame box unless the description contains
/// "ABSENT". Embedders use vector images directly (normalised) and otherwise
/// hash the image bytes, crop box and seed into a unit vector. Text-image and
/// extra scores hash (text, image, seed) into [0,1). Safe for concurrent use.
class MockSuite final : public ScorerSuite {
public:
    using ExtraScorer = std::function<double(const std::string& text, const ImageRef& image)>;

    static constexpr std::size_t kHashedDim = 16;

    explicit MockSuite(std::uint64_t seed = 0);

    std::optional<BoundingBox> detect(const ImageRef& image, const std::string& description) const override;
    Vec embed_identity(const Crop& crop) const override;
    Vec embed_style(const ImageRef& image) const override;
    double score_text_image(const std::string& text, const ImageRef& image) const override;

    bool has_extra(const std::string& name) const override;
    double score_extra(const std::string& name, const std::string& text, const ImageRef& image) const override;

    /// Registers an extra scorer; may shadow the built-in hashed "pick".
    /// Not thread-safe against concurrent scoring.
    void set_extra(const std::string& name, ExtraScorer scorer);

    std::uint64_t seed() const noexcept { return seed_; }

private:
    Vec hashed_unit(std::string_view salt, std::string_view payload) const;
    double hashed_score(std::string_view salt, const std::string& text, const ImageRef& image) const;

    std::uint64_t seed_;
    std::map<std::string, ExtraScorer> extras_;
};

} // namespace vacot
