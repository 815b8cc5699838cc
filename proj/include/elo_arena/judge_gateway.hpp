#ifndef ELO_ARENA_JUDGE_GATEWAY_HPP
#define ELO_ARENA_JUDGE_GATEWAY_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <optional>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace elo_arena {

/// Connection settings for a remote judge serving POST /v1/compare and /v1/score.
struct GatewayConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    int max_in_flight = 4;
    // "{prompt}" in a template is replaced with the prompt text; an empty
    // template sends the prompt unchanged.
    std::string prompt_template_compare;
    std::string prompt_template_score;
    std::chrono::milliseconds backoff_base{250};
    double backoff_factor = 2.0;
    std::string bearer_token;

    void validate() const;
};

/// Reads a GatewayConfig from a JSON object; missing keys keep their defaults.
GatewayConfig gateway_config_from_json(const nlohmann::json& j);

enum class RemoteWinner { a, b, tie };

const char* to_string(RemoteWinner w);

struct CompareRequest {
    std::string prompt;
    std::string response_a;
    std::string response_b;
    std::string request_id;
};

/// HTTP client for a judge model. Thread-safe; at most max_in_flight requests
/// are outstanding at once across all callers of one gateway.
class JudgeGateway {
public:
    /// ELO_ARENA_JUDGE_URL, when set, overrides cfg.base_url.
    explicit JudgeGateway(GatewayConfig cfg);

    const GatewayConfig& config() const { return cfg_; }

    RemoteWinner compare(const std::string& prompt, const std::string& response_a,
                         const std::string& response_b, const std::string& request_id = {});
    double score(const std::string& prompt, const std::string& response, const std::string& request_id = {});

    /// Issues every request concurrently (bounded by max_in_flight) and returns
    /// verdicts in request order. Once all requests have settled, the error of
    /// the earliest failing request (if any) is rethrown.
    std::vector<RemoteWinner> compare_batch(std::span<const CompareRequest> requests);

    struct Settled {
        std::optional<RemoteWinner> winner;
        std::exception_ptr error;
    };

    /// Like compare_batch, but reports each request's outcome instead of throwing.
    std::vector<Settled> settle_batch(std::span<const CompareRequest> requests);

    /// Number of HTTP attempts made so far, retries included.
    std::uint64_t attempts() const;

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body, const std::string& request_id);
    std::string next_request_id();

    class Slot;

    GatewayConfig cfg_;
    std::string scheme_host_port_;
    std::string path_prefix_;

    mutable std::mutex mutex_;
    std::condition_variable slot_free_;
    int in_flight_ = 0;
    std::uint64_t attempts_ = 0;
    std::uint64_t request_counter_ = 0;
};

RemoteWinner remote_compare(const GatewayConfig& cfg, const std::string& prompt,
                            const std::string& response_a, const std::string& response_b);
double remote_score(const GatewayConfig& cfg, const std::string& prompt, const std::string& response);

}  // namespace elo_arena

#endif
