// SPDX-License-Identifier: Apache-2.0
#include "vacot/context.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

namespace vacot {

Prompt::Prompt(std::string text): text_(std::move(text))
{
    if (text_.empty())
        throw Error(Errc::EmptyPrompt, "prompt must be non-empty");
}

const ImageRef& VisualContext::at(const ImageId& id) const
{
    if (id.is_generated() || id.index() > images.size())
        throw Error(Errc::PlanInvalid,
                    fmt::format("{} does not address a context of {} images", id.str(), images.size()));
    return images[id.index() - 1];
}

} // namespace vacot
