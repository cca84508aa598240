// SPDX-License-Identifier: Apache-2.0
#include "vacot/transport.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace vacot {

namespace {

struct SplitUrl {
    std::string origin;
    std::string path;
};

SplitUrl split_url(const std::string& url)
{
    auto const scheme_end = url.find("://");
    if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http")
        throw Error(Errc::InvalidConfig, fmt::format("endpoint '{}' must be an http:// URL", url));
    auto const path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

JsonTransport http_transport(HttpEndpoint endpoint)
{
    auto parts = split_url(endpoint.url);
    return [endpoint = std::move(endpoint), parts = std::move(parts)](const nlohmann::json& request) {
        httplib::Client client(parts.origin);
        client.set_connection_timeout(endpoint.timeout_seconds, 0);
        client.set_read_timeout(endpoint.timeout_seconds, 0);
        httplib::Headers headers;
        if (!endpoint.token.empty())
            headers.emplace("Authorization", "Bearer " + endpoint.token);
        auto res = client.Post(parts.path, headers, request.dump(), "application/json");
        if (!res)
            throw Error(Errc::TransportFailure,
                        fmt::format("POST {} failed: {}", endpoint.url, httplib::to_string(res.error())));
        if (res->status != 200)
            throw Error(Errc::TransportFailure, fmt::format("POST {} returned HTTP {}", endpoint.url, res->status));
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::TransportFailure, fmt::format("POST {}: response is not JSON: {}", endpoint.url, e.what()));
        }
    };
}

JsonTransport with_retries(JsonTransport inner, RetryPolicy policy)
{
    return [inner = std::move(inner), policy](const nlohmann::json& request) {
        auto backoff = policy.initial_backoff;
        for (int attempt = 1;; ++attempt) {
            try {
                return inner(request);
            } catch (const Error& e) {
                if (e.code() != Errc::TransportFailure || attempt >= policy.attempts)
                    throw;
            }
            if (backoff.count() > 0)
                std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    };
}

std::string env_or_empty(const char* name)
{
    if (auto const* v = std::getenv(name))
        return v;
    return {};
}

} // namespace vacot
