// SPDX-License-Identifier: Apache-2.0
#include "vacot/mock_suite.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <random>

namespace vacot {

namespace {
constexpr const char* kBuiltinPick = "pick";
}

MockSuite::MockSuite(std::uint64_t seed): seed_(seed)
{
}

std::optional<BoundingBox> MockSuite::detect(const ImageRef&, const std::string& description) const
{
    if (description.find("ABSENT") != std::string::npos)
        return std::nullopt;
    return BoundingBox::full_frame();
}

Vec MockSuite::hashed_unit(std::string_view salt, std::string_view payload) const
{
    std::string key = fmt::format("{}:{}:", salt, seed_);
    key.append(payload);
    std::mt19937_64 rng(hash64(key));
    std::normal_distribution<double> normal;
    Vec v(kHashedDim);
    double n = 0.0;
    while (n == 0.0) {
        for (auto& x : v)
            x = normal(rng);
        n = l2_norm(v);
    }
    for (auto& x : v)
        x /= n;
    return v;
}

namespace {

std::optional<Vec> normalised_vector(const ImageRef& image)
{
    if (!image.is_vector())
        return std::nullopt;
    Vec v = image.vector();
    double const n = l2_norm(v);
    if (n == 0.0)
        return std::nullopt;
    for (auto& x : v)
        x /= n;
    return v;
}

} // namespace

Vec MockSuite::embed_identity(const Crop& crop) const
{
    if (auto v = normalised_vector(crop.image))
        return *v;
    auto const& b = crop.box;
    return hashed_unit("identity",
                       fmt::format("{},{},{},{}|", b.x0, b.y0, b.x1, b.y1) + crop.image.content_bytes());
}

Vec MockSuite::embed_style(const ImageRef& image) const
{
    if (auto v = normalised_vector(image))
        return *v;
    return hashed_unit("style", image.content_bytes());
}

double MockSuite::hashed_score(std::string_view salt, const std::string& text, const ImageRef& image) const
{
    auto const key = fmt::format("{}:{}:{}:{}|", salt, seed_, text.size(), text) + image.content_bytes();
    return static_cast<double>(hash64(key) >> 11) * 0x1.0p-53;
}

double MockSuite::score_text_image(const std::string& text, const ImageRef& image) const
{
    return hashed_score("text", text, image);
}

bool MockSuite::has_extra(const std::string& name) const
{
    return name == kBuiltinPick || extras_.contains(name);
}

double MockSuite::score_extra(const std::string& name, const std::string& text, const ImageRef& image) const
{
    if (auto it = extras_.find(name); it != extras_.end())
        return it->second(text, image);
    if (name == kBuiltinPick)
        return hashed_score(kBuiltinPick, text, image);
    return ScorerSuite::score_extra(name, text, image);
}

void MockSuite::set_extra(const std::string& name, ExtraScorer scorer)
{
    extras_[name] = std::move(scorer);
}

} // namespace vacot
