// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/image.hpp"
#include "vacot/plan.hpp"

#include <string>
#include <vector>

namespace vacot {

/// Non-empty text prompt.
class Prompt {
public:
    explicit Prompt(std::string text); // throws EmptyPrompt

    const std::string& text() const noexcept { return text_; }
    bool operator==(const Prompt&) const = default;

private:
    std::string text_;
};

/// Ordered reference images, addressed 1-based as image_1..image_n.
struct VisualContext {
    std::vector<ImageRef> images;

    std::size_t size() const noexcept { return images.size(); }
    /// Throws PlanInvalid for GENERATED or out-of-range ids.
    const ImageRef& at(const ImageId& id) const;

    bool operator==(const VisualContext&) const = default;
};

} // namespace vacot
