// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/util.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace vacot {

/// Opaque image handle: a file path, an inline byte blob, or (for the simulated
/// backend) a feature vector.
class ImageRef {
public:
    enum class Kind { Path, Blob, Vector };

    ImageRef() = default;

    static ImageRef from_path(std::string path);
    static ImageRef from_blob(std::vector<std::uint8_t> bytes);
    static ImageRef from_vector(Vec features);

    Kind kind() const noexcept;
    bool is_vector() const noexcept { return kind() == Kind::Vector; }

    const std::string& path() const;
    const std::vector<std::uint8_t>& blob() const;
    const Vec& vector() const;

    /// Raw bytes identifying the image content. Paths are read from disk; vectors
    /// are rendered as their little-endian doubles.
    std::string content_bytes() const;

    bool operator==(const ImageRef&) const = default;

private:
    struct PathImage {
        std::string path;
        bool operator==(const PathImage&) const = default;
    };
    struct BlobImage {
        std::vector<std::uint8_t> bytes;
        bool operator==(const BlobImage&) const = default;
    };
    struct VectorImage {
        Vec features;
        bool operator==(const VectorImage&) const = default;
    };

    std::variant<PathImage, BlobImage, VectorImage> value_ {VectorImage {}};
};

// {"path": "..."} | {"blob": "<base64>"} | {"vector": [...]}
nlohmann::json to_json(const ImageRef& image);
ImageRef image_from_json(const nlohmann::json& j);

/// Loads a vector image from a text file of whitespace- or comma-separated numbers.
ImageRef load_vector_image(const std::filesystem::path& path);

} // namespace vacot
