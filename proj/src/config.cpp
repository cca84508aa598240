// SPDX-License-Identifier: Apache-2.0
#include "vacot/config.hpp"

#include "vacot/error.hpp"
#include "vacot/transport.hpp"

#include <fmt/format.h>

namespace vacot {

using nlohmann::json;

EnvLookup process_env()
{
    return [](const char* name) { return env_or_empty(name); };
}

AppConfig config_from_json(const json& doc)
{
    if (!doc.is_object())
        throw Error(Errc::InvalidConfig, "config must be a JSON object");
    AppConfig c;
    auto const section = [&](const char* key) { return doc.contains(key) ? doc.at(key) : json::object(); };
    try {
        auto const services = section("services");
        c.annotator_url = services.value("annotator_url", c.annotator_url);
        c.scorer_url = services.value("scorer_url", c.scorer_url);
        c.backend_url = services.value("backend_url", c.backend_url);
        if (services.contains("annotator_token") || services.contains("scorer_token"))
            throw Error(Errc::InvalidConfig, "tokens are read from the environment only");

        c.engine = engine_config_from_json(section("engine"));
        c.sim = sim_spec_from_json(section("sim"));
        if (doc.contains("weights"))
            c.weights = weights_from_json(doc.at("weights"));
        c.grpo = grpo_config_from_json(section("grpo"));
        c.toy_env = toy_env_from_json(section("toy_env"));
        c.toy_train = toy_train_options_from_json(section("toy_train"));
        c.optimizer = optimizer_settings_from_json(section("optimizer"));

        auto const dataset = section("dataset");
        c.concurrency = dataset.value("concurrency", c.concurrency);
        c.image_token_cost = dataset.value("image_token_cost", c.image_token_cost);
        c.pack_budget = dataset.value("pack_budget", c.pack_budget);
        c.perfect_fraction = dataset.value("perfect_fraction", c.perfect_fraction);
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidConfig, fmt::format("config: {}", e.what()));
    } catch (const Error& e) {
        if (e.code() == Errc::InvalidConfig)
            throw;
        throw Error(Errc::InvalidConfig, fmt::format("config: {}: {}", e.name(), e.what()));
    }
    if (c.concurrency == 0)
        throw Error(Errc::InvalidConfig, "dataset.concurrency must be positive");
    if (c.pack_budget == 0)
        throw Error(Errc::InvalidConfig, "dataset.pack_budget must be positive");
    if (!(c.perfect_fraction >= 0.0 && c.perfect_fraction <= 1.0))
        throw Error(Errc::InvalidConfig, "dataset.perfect_fraction must lie in [0, 1]");
    return c;
}

json to_json(const AppConfig& c)
{
    return {{"services", {{"annotator_url", c.annotator_url}, {"scorer_url", c.scorer_url}, {"backend_url", c.backend_url}}},
            {"engine", to_json(c.engine)},
            {"sim", to_json(c.sim)},
            {"weights", to_json(c.weights)},
            {"grpo", to_json(c.grpo)},
            {"toy_env", to_json(c.toy_env)},
            {"toy_train", to_json(c.toy_train)},
            {"optimizer", to_json(c.optimizer)},
            {"dataset",
             {{"concurrency", c.concurrency},
              {"image_token_cost", c.image_token_cost},
              {"pack_budget", c.pack_budget},
              {"perfect_fraction", c.perfect_fraction}}}};
}

AppConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env)
{
    AppConfig c;
    if (path) {
        json doc;
        try {
            doc = json::parse(read_file(*path));
        } catch (const json::exception& e) {
            throw Error(Errc::InvalidConfig, fmt::format("{}: {}", path->string(), e.what()));
        }
        c = config_from_json(doc);
    }
    if (c.annotator_url.empty())
        c.annotator_url = env("VACOT_ANNOTATOR_URL");
    if (c.scorer_url.empty())
        c.scorer_url = env("VACOT_SCORER_URL");
    if (c.backend_url.empty())
        c.backend_url = env("VACOT_BACKEND_URL");
    c.annotator_token = env("VACOT_ANNOTATOR_TOKEN");
    c.scorer_token = env("VACOT_SCORER_TOKEN");
    return c;
}

} // namespace vacot
