#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctxaudit::backends {

// Abstract text-generation capability. Implementations must be safely
// callable from many concurrent audit trials.
class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;
    virtual std::string generate(const std::string& system_prompt,
                                 const std::string& user_message) = 0;
};

// Abstract text-embedding capability. Same text must always map to the same
// vector of the declared dimension.
class EmbedderBackend {
public:
    virtual ~EmbedderBackend() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(const std::string& text) = 0;
};

// ---------------------------------------------------------------------------
// Scripted oracles: deterministic stand-ins for the LLM so every audit can
// run offline. Behavior is a pure seeded function of the prompt text.
// ---------------------------------------------------------------------------

struct ScriptedOracleConfig {
    double detection_rate = 1.0;       // P(positive | canary in context)
    double false_positive_rate = 0.0;  // P(positive | canary absent)
    std::string canary_text;
    std::string positive_output = "1";  // rare label, or the canary echo
    std::string negative_output = "0";
    std::uint64_t seed = 0;
};

// Answers positive_output when the canary text appears in the *system*
// prompt (the context), with the configured detection rate; query text is
// deliberately ignored so the oracle models context leakage only.
class ScriptedOracle : public GeneratorBackend {
public:
    explicit ScriptedOracle(ScriptedOracleConfig config);
    std::string generate(const std::string& system_prompt,
                         const std::string& user_message) override;

private:
    ScriptedOracleConfig config_;
};

// Always returns the same text.
class ConstantGenerator : public GeneratorBackend {
public:
    explicit ConstantGenerator(std::string output) : output_(std::move(output)) {}
    std::string generate(const std::string&, const std::string&) override {
        return output_;
    }

private:
    std::string output_;
};

// Defense-aware oracle for heuristic-defense evaluation. On a prompt-
// injection query it dumps the exemplar block, unless obeys_prompt_defenses
// and a defense prompt is present, in which case it refuses with "None".
// Label queries are answered honestly through the wrapped ScriptedOracle
// regardless of defenses.
class InjectionAwareOracle : public GeneratorBackend {
public:
    InjectionAwareOracle(ScriptedOracleConfig label_behavior, bool obeys_prompt_defenses);
    std::string generate(const std::string& system_prompt,
                         const std::string& user_message) override;

private:
    ScriptedOracle label_oracle_;
    bool obeys_prompt_defenses_;
};

// Task oracle for utility measurement: finds which known eval input appears
// in the prompt and returns its gold label (with the configured accuracy).
class TaskOracle : public GeneratorBackend {
public:
    struct Entry {
        std::string input;
        std::string label;
    };
    TaskOracle(std::vector<Entry> truth, double accuracy, std::string fallback,
               std::uint64_t seed);
    std::string generate(const std::string& system_prompt,
                         const std::string& user_message) override;

private:
    std::vector<Entry> truth_;
    double accuracy_;
    std::string fallback_;
    std::uint64_t seed_;
};

// Scripted L3 judge: extracts the model-output section from the rendered
// judge prompt and answers "Attack" when it shares a long-enough substring
// with any protected text, else "Safe".
class SubstringJudge : public GeneratorBackend {
public:
    SubstringJudge(std::vector<std::string> protected_texts, std::size_t min_overlap = 20);
    std::string generate(const std::string& system_prompt,
                         const std::string& user_message) override;

private:
    std::vector<std::string> protected_texts_;
    std::size_t min_overlap_;
};

// Seeded random-projection embedder over the token multiset; texts sharing
// more tokens have higher cosine similarity. Output is L2-normalized.
class HashedEmbedder : public EmbedderBackend {
public:
    HashedEmbedder(std::size_t dimension, std::uint64_t seed);
    std::size_t dimension() const override { return dimension_; }
    std::vector<double> embed(const std::string& text) override;

private:
    const std::vector<double>& token_vector(const std::string& token);

    std::size_t dimension_;
    std::uint64_t seed_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::vector<double>> cache_;
};

// ---------------------------------------------------------------------------
// HTTP provider client
// ---------------------------------------------------------------------------

// Token-bucket limiter over a sliding interval. Clock and sleep are
// injectable so the no-overrun property is testable with a virtual clock.
class RateLimiter {
public:
    using Clock = std::function<std::chrono::milliseconds()>;
    using Sleep = std::function<void(std::chrono::milliseconds)>;

    RateLimiter(std::size_t max_requests, std::chrono::milliseconds interval,
                Clock clock = nullptr, Sleep sleep = nullptr);

    // Blocks until a request slot is available, then claims it.
    void acquire();

private:
    std::size_t max_requests_;
    std::chrono::milliseconds interval_;
    Clock clock_;
    Sleep sleep_;
    std::mutex mutex_;
    std::vector<std::chrono::milliseconds> recent_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{250};
    double backoff_multiplier = 2.0;
};

struct HttpBackendConfig {
    std::string base_url;  // e.g. "https://api.openai.com/v1"
    std::string model_id;
    std::string api_key_env = "CTXAUDIT_API_KEY";
    double temperature = 0.0;
    int max_tokens = 16;
    std::chrono::milliseconds timeout{30000};
    RetryPolicy retry;
    std::shared_ptr<RateLimiter> rate_limiter;  // optional, shared across calls
};

// Chat-completions style generator: POST {base}/chat/completions with
// {model, messages, temperature, max_tokens}. Retries transient failures
// (408/429/5xx and transport errors) per the retry policy.
class HttpChatGenerator : public GeneratorBackend {
public:
    explicit HttpChatGenerator(HttpBackendConfig config);
    std::string generate(const std::string& system_prompt,
                         const std::string& user_message) override;

private:
    HttpBackendConfig config_;
    std::string api_key_;
};

// Embeddings endpoint client: POST {base}/embeddings with {model, input}.
class HttpEmbedder : public EmbedderBackend {
public:
    HttpEmbedder(HttpBackendConfig config, std::size_t dimension);
    std::size_t dimension() const override { return dimension_; }
    std::vector<double> embed(const std::string& text) override;

private:
    HttpBackendConfig config_;
    std::string api_key_;
    std::size_t dimension_;
};

// Reads the API key from the environment variable named in the config;
// throws InvalidArgumentError when unset or empty.
std::string resolve_api_key(const std::string& env_var);

}  // namespace ctxaudit::backends
