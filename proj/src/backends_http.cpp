// HTTP provider clients. Kept in their own translation unit so the heavy
// httplib/OpenSSL include stays out of everything else.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <json.hpp>

#include "ctxaudit/backends.hpp"
#include "ctxaudit/error.hpp"

namespace ctxaudit::backends {

namespace {

struct ParsedUrl {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // e.g. "/v1", possibly empty
};

ParsedUrl parse_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw InvalidArgumentError("base_url must include a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.origin = base_url;
    } else {
        out.origin = base_url.substr(0, path_start);
        out.path_prefix = base_url.substr(path_start);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
            out.path_prefix.pop_back();
    }
    return out;
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || (status >= 500 && status < 600);
}

std::string body_excerpt(const std::string& body) {
    constexpr std::size_t kMax = 240;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

// POSTs JSON with retry/backoff under the configured rate limiter and
// returns the parsed 2xx body.
nlohmann::json post_json(const HttpBackendConfig& config, const std::string& api_key,
                         const std::string& endpoint, const nlohmann::json& payload) {
    const ParsedUrl url = parse_base_url(config.base_url);
    const std::string path = url.path_prefix + endpoint;
    const std::string body = payload.dump();

    std::string last_failure = "no attempt made";
    auto backoff = config.retry.initial_backoff;
    for (int attempt = 0; attempt <= config.retry.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(static_cast<long long>(
                static_cast<double>(backoff.count()) * config.retry.backoff_multiplier));
        }
        if (config.rate_limiter) config.rate_limiter->acquire();

        httplib::Client client(url.origin);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
            config.timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(
            config.timeout));
        httplib::Headers headers{{"Authorization", "Bearer " + api_key}};

        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_failure = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw ProviderError(std::string("unparseable provider response: ") + e.what(),
                                    res->status, body_excerpt(res->body));
            }
        }
        if (retryable_status(res->status)) {
            last_failure = "status " + std::to_string(res->status);
            continue;
        }
        throw ProviderError("provider rejected request with status " +
                                std::to_string(res->status),
                            res->status, body_excerpt(res->body));
    }
    throw TransportError("retries exhausted for " + path + " (" + last_failure + ")");
}

}  // namespace

HttpChatGenerator::HttpChatGenerator(HttpBackendConfig config)
    : config_(std::move(config)), api_key_(resolve_api_key(config_.api_key_env)) {
    if (config_.model_id.empty()) throw InvalidArgumentError("http backend needs model_id");
    if (config_.max_tokens < 1) throw InvalidArgumentError("max_tokens must be >= 1");
    if (config_.temperature < 0.0) throw InvalidArgumentError("temperature must be >= 0");
}

std::string HttpChatGenerator::generate(const std::string& system_prompt,
                                        const std::string& user_message) {
    nlohmann::json messages = nlohmann::json::array();
    if (!system_prompt.empty())
        messages.push_back({{"role", "system"}, {"content", system_prompt}});
    messages.push_back({{"role", "user"}, {"content", user_message}});
    const nlohmann::json payload{{"model", config_.model_id},
                                 {"messages", messages},
                                 {"temperature", config_.temperature},
                                 {"max_tokens", config_.max_tokens}};
    const auto response = post_json(config_, api_key_, "/chat/completions", payload);
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("chat response missing content: ") + e.what(), 200,
                            body_excerpt(response.dump()));
    }
}

HttpEmbedder::HttpEmbedder(HttpBackendConfig config, std::size_t dimension)
    : config_(std::move(config)), api_key_(resolve_api_key(config_.api_key_env)),
      dimension_(dimension) {
    if (config_.model_id.empty()) throw InvalidArgumentError("http embedder needs model_id");
    if (dimension_ < 2) throw InvalidArgumentError("embedder dimension must be >= 2");
}

std::vector<double> HttpEmbedder::embed(const std::string& text) {
    const nlohmann::json payload{{"model", config_.model_id}, {"input", text}};
    const auto response = post_json(config_, api_key_, "/embeddings", payload);
    std::vector<double> vec;
    try {
        vec = response.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("embedding response malformed: ") + e.what(), 200,
                            body_excerpt(response.dump()));
    }
    if (vec.size() != dimension_)
        throw InvalidStateError("embedder returned dimension " + std::to_string(vec.size()) +
                                ", declared " + std::to_string(dimension_));
    return vec;
}

}  // namespace ctxaudit::backends
