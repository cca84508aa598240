// SPDX-License-Identifier: Apache-2.0
#include "vacot/image.hpp"

#include "vacot/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <sstream>

namespace vacot {

ImageRef ImageRef::from_path(std::string path)
{
    ImageRef r;
    r.value_ = PathImage {std::move(path)};
    return r;
}

ImageRef ImageRef::from_blob(std::vector<std::uint8_t> bytes)
{
    ImageRef r;
    r.value_ = BlobImage {std::move(bytes)};
    return r;
}

ImageRef ImageRef::from_vector(Vec features)
{
    ImageRef r;
    r.value_ = VectorImage {std::move(features)};
    return r;
}

ImageRef::Kind ImageRef::kind() const noexcept
{
    switch (value_.index()) {
    case 0: return Kind::Path;
    case 1: return Kind::Blob;
    default: return Kind::Vector;
    }
}

const std::string& ImageRef::path() const
{
    if (auto const* p = std::get_if<PathImage>(&value_))
        return p->path;
    throw Error(Errc::InvalidImage, "image is not a path reference");
}

const std::vector<std::uint8_t>& ImageRef::blob() const
{
    if (auto const* p = std::get_if<BlobImage>(&value_))
        return p->bytes;
    throw Error(Errc::InvalidImage, "image is not an inline blob");
}

const Vec& ImageRef::vector() const
{
    if (auto const* p = std::get_if<VectorImage>(&value_))
        return p->features;
    throw Error(Errc::InvalidImage, "image is not a feature vector");
}

std::string ImageRef::content_bytes() const
{
    switch (kind()) {
    case Kind::Path: return read_file(path());
    case Kind::Blob: return std::string(blob().begin(), blob().end());
    case Kind::Vector: {
        auto const& v = vector();
        std::string out(v.size() * sizeof(double), '\0');
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto bits = std::bit_cast<std::uint64_t>(v[i]);
            for (std::size_t b = 0; b < 8; ++b)
                out[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
        }
        return out;
    }
    }
    return {};
}

nlohmann::json to_json(const ImageRef& image)
{
    switch (image.kind()) {
    case ImageRef::Kind::Path: return {{"path", image.path()}};
    case ImageRef::Kind::Blob: return {{"blob", base64_encode(image.blob())}};
    case ImageRef::Kind::Vector: return {{"vector", image.vector()}};
    }
    return {};
}

ImageRef image_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || j.size() != 1)
        throw Error(Errc::MalformedInput, "image reference must be an object with exactly one of path|blob|vector");
    if (auto it = j.find("path"); it != j.end() && it->is_string())
        return ImageRef::from_path(it->get<std::string>());
    if (auto it = j.find("blob"); it != j.end() && it->is_string())
        return ImageRef::from_blob(base64_decode(it->get<std::string>()));
    if (auto it = j.find("vector"); it != j.end() && it->is_array()) {
        Vec v;
        for (auto const& x : *it) {
            if (!x.is_number())
                throw Error(Errc::MalformedInput, "vector image entries must be numbers");
            v.push_back(x.get<double>());
        }
        return ImageRef::from_vector(std::move(v));
    }
    throw Error(Errc::MalformedInput, "unrecognised image reference: " + j.dump());
}

ImageRef load_vector_image(const std::filesystem::path& path)
{
    auto text = read_file(path);
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    Vec v;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size())
            throw Error(Errc::MalformedInput, "non-numeric token '" + tok + "' in " + path.string());
        v.push_back(x);
    }
    if (v.empty())
        throw Error(Errc::MalformedInput, "empty vector image " + path.string());
    return ImageRef::from_vector(std::move(v));
}

} // namespace vacot
