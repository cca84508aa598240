// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/reward.hpp"
#include "vacot/transport.hpp"

namespace vacot {

/// Scorer suite backed by a remote service.
///
/// Request:  {"op": detect|embed_identity|embed_style|score_text_image,
///            "payload": {"image": <path or base64>, "image_encoding": "path"|"base64"|"vector",
///                        "vector"?: [...], "text"?: str, "crop"?: box, "scorer"?: name}}
/// Response: {"ok": bool, "vector"?: [...], "box"?: box|null, "score"?: number, "error"?: str}
///
/// Extra scorers use op score_text_image with payload.scorer set. Declares
/// itself serial.
class HttpScorerSuite final : public ScorerSuite {
public:
    HttpScorerSuite(JsonTransport transport, std::vector<std::string> extra_names = {});

    std::optional<BoundingBox> detect(const ImageRef& image, const std::string& description) const override;
    Vec embed_identity(const Crop& crop) const override;
    Vec embed_style(const ImageRef& image) const override;
    double score_text_image(const std::string& text, const ImageRef& image) const override;

    bool has_extra(const std::string& name) const override;
    double score_extra(const std::string& name, const std::string& text, const ImageRef& image) const override;

    bool concurrent_safe() const override { return false; }

private:
    nlohmann::json call(std::string_view op, nlohmann::json payload) const;

    JsonTransport transport_;
    std::vector<std::string> extras_;
};

nlohmann::json image_payload(const ImageRef& image);
nlohmann::json to_json(const BoundingBox& box);
BoundingBox box_from_json(const nlohmann::json& j);

} // namespace vacot
