// SPDX-License-Identifier: Apache-2.0
#include "vacot/http_scorer.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace vacot {

using nlohmann::json;

json image_payload(const ImageRef& image)
{
    switch (image.kind()) {
    case ImageRef::Kind::Path: return {{"image", image.path()}, {"image_encoding", "path"}};
    case ImageRef::Kind::Blob: return {{"image", base64_encode(image.blob())}, {"image_encoding", "base64"}};
    case ImageRef::Kind::Vector: return {{"image", ""}, {"image_encoding", "vector"}, {"vector", image.vector()}};
    }
    return {};
}

json to_json(const BoundingBox& box)
{
    return {{"x0", box.x0}, {"y0", box.y0}, {"x1", box.x1}, {"y1", box.y1}, {"confidence", box.confidence}};
}

BoundingBox box_from_json(const json& j)
{
    try {
        BoundingBox b {j.at("x0").get<double>(), j.at("y0").get<double>(), j.at("x1").get<double>(),
                       j.at("y1").get<double>(), j.value("confidence", 1.0)};
        if (!b.valid())
            throw Error(Errc::MalformedInput, "box outside the unit square: " + j.dump());
        return b;
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, std::string("bounding box: ") + e.what());
    }
}

HttpScorerSuite::HttpScorerSuite(JsonTransport transport, std::vector<std::string> extra_names):
    transport_(std::move(transport)), extras_(std::move(extra_names))
{
}

json HttpScorerSuite::call(std::string_view op, json payload) const
{
    json const request = {{"op", op}, {"payload", std::move(payload)}};
    json response;
    try {
        response = transport_(request);
    } catch (const Error& e) {
        throw Error(Errc::EmbedderFailure, fmt::format("scorer {} failed: {}", op, e.what()));
    }
    if (!response.is_object() || !response.value("ok", false))
        throw Error(Errc::EmbedderFailure,
                    fmt::format("scorer {} error: {}", op,
                                response.is_object() ? response.value("error", "unspecified") : response.dump()));
    return response;
}

std::optional<BoundingBox> HttpScorerSuite::detect(const ImageRef& image, const std::string& description) const
{
    auto payload = image_payload(image);
    payload["text"] = description;
    auto const r = call("detect", std::move(payload));
    auto it = r.find("box");
    if (it == r.end() || it->is_null())
        return std::nullopt;
    return box_from_json(*it);
}

namespace {

Vec vector_field(const json& r, std::string_view op)
{
    auto it = r.find("vector");
    if (it == r.end() || !it->is_array())
        throw Error(Errc::EmbedderFailure, fmt::format("scorer {} returned no vector", op));
    return it->get<Vec>();
}

double score_field(const json& r, std::string_view op)
{
    auto it = r.find("score");
    if (it == r.end() || !it->is_number())
        throw Error(Errc::EmbedderFailure, fmt::format("scorer {} returned no score", op));
    return it->get<double>();
}

} // namespace

Vec HttpScorerSuite::embed_identity(const Crop& crop) const
{
    auto payload = image_payload(crop.image);
    payload["crop"] = to_json(crop.box);
    return vector_field(call("embed_identity", std::move(payload)), "embed_identity");
}

Vec HttpScorerSuite::embed_style(const ImageRef& image) const
{
    return vector_field(call("embed_style", image_payload(image)), "embed_style");
}

double HttpScorerSuite::score_text_image(const std::string& text, const ImageRef& image) const
{
    auto payload = image_payload(image);
    payload["text"] = text;
    return score_field(call("score_text_image", std::move(payload)), "score_text_image");
}

bool HttpScorerSuite::has_extra(const std::string& name) const
{
    return std::find(extras_.begin(), extras_.end(), name) != extras_.end();
}

double HttpScorerSuite::score_extra(const std::string& name, const std::string& text, const ImageRef& image) const
{
    if (!has_extra(name))
        return ScorerSuite::score_extra(name, text, image);
    auto payload = image_payload(image);
    payload["text"] = text;
    payload["scorer"] = name;
    return score_field(call("score_text_image", std::move(payload)), name);
}

} // namespace vacot
