#include "elo_arena/judge_gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <algorithm>
#include <atomic>
#include <thread>

#include <httplib.h>

#include "elo_arena/errors.hpp"

namespace elo_arena {

namespace {

std::string apply_template(const std::string& tmpl, const std::string& prompt) {
    if (tmpl.empty()) return prompt;
    std::string out = tmpl;
    const std::string key = "{prompt}";
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + prompt.size())) {
        out.replace(pos, key.size(), prompt);
    }
    return out;
}

void require_non_empty(const std::string& s, const char* what) {
    if (s.empty()) throw InvalidArgument(std::string("judge gateway: ") + what + " must be non-empty");
}

bool retryable_status(int status) { return status >= 500 || status == 429 || status == 408; }

}  // namespace

void GatewayConfig::validate() const {
    if (base_url.empty()) throw ConfigError("gateway base_url is empty");
    if (const auto scheme = base_url.find("://");
        scheme != std::string::npos && base_url.compare(0, scheme, "http") != 0 && base_url.compare(0, scheme, "https") != 0) {
        throw ConfigError("gateway base_url must use http or https: " + base_url);
    }
    if (timeout.count() <= 0) throw ConfigError("gateway timeout must be positive");
    if (max_retries < 0) throw ConfigError("gateway max_retries must be >= 0");
    if (max_in_flight < 1) throw ConfigError("gateway max_in_flight must be >= 1");
    if (backoff_base.count() < 0 || !(backoff_factor >= 1.0)) throw ConfigError("gateway backoff is invalid");
}

GatewayConfig gateway_config_from_json(const nlohmann::json& j) {
    GatewayConfig cfg;
    cfg.base_url = j.value("base_url", cfg.base_url);
    cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", cfg.timeout.count()));
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
    cfg.prompt_template_compare = j.value("prompt_template_compare", cfg.prompt_template_compare);
    cfg.prompt_template_score = j.value("prompt_template_score", cfg.prompt_template_score);
    cfg.backoff_base = std::chrono::milliseconds(j.value("backoff_base_ms", cfg.backoff_base.count()));
    cfg.backoff_factor = j.value("backoff_factor", cfg.backoff_factor);
    cfg.bearer_token = j.value("bearer_token", cfg.bearer_token);
    cfg.validate();
    return cfg;
}

const char* to_string(RemoteWinner w) {
    switch (w) {
        case RemoteWinner::a: return "a";
        case RemoteWinner::b: return "b";
        case RemoteWinner::tie: return "tie";
    }
    return "?";
}

// Holds one of the max_in_flight request slots for its lifetime.
class JudgeGateway::Slot {
public:
    explicit Slot(JudgeGateway& gw) : gw_(gw) {
        std::unique_lock lock(gw_.mutex_);
        gw_.slot_free_.wait(lock, [&] { return gw_.in_flight_ < gw_.cfg_.max_in_flight; });
        ++gw_.in_flight_;
    }
    ~Slot() {
        {
            std::lock_guard lock(gw_.mutex_);
            --gw_.in_flight_;
        }
        gw_.slot_free_.notify_one();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

private:
    JudgeGateway& gw_;
};

JudgeGateway::JudgeGateway(GatewayConfig cfg) : cfg_(std::move(cfg)) {
    if (const char* env = std::getenv("ELO_ARENA_JUDGE_URL"); env != nullptr && *env != '\0') {
        cfg_.base_url = env;
    }
    cfg_.validate();

    // Split "scheme://host:port/prefix" into the client address and a path prefix.
    const auto scheme_end = cfg_.base_url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = cfg_.base_url.find('/', host_start);
    if (path_start == std::string::npos) {
        scheme_host_port_ = cfg_.base_url;
    } else {
        scheme_host_port_ = cfg_.base_url.substr(0, path_start);
        path_prefix_ = cfg_.base_url.substr(path_start);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
    if (host_start >= scheme_host_port_.size()) throw ConfigError("gateway base_url has no host: " + cfg_.base_url);
}

std::uint64_t JudgeGateway::attempts() const {
    std::lock_guard lock(mutex_);
    return attempts_;
}

std::string JudgeGateway::next_request_id() {
    std::lock_guard lock(mutex_);
    return "req-" + std::to_string(++request_counter_);
}

nlohmann::json JudgeGateway::post(const std::string& path, const nlohmann::json& body,
                                  const std::string& request_id) {
    const std::string payload = body.dump();
    std::string last_error;
    auto delay = cfg_.backoff_base;

    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay = std::chrono::milliseconds(
                static_cast<long long>(std::llround(static_cast<double>(delay.count()) * cfg_.backoff_factor)));
        }

        httplib::Result res;
        {
            Slot slot(*this);
            {
                std::lock_guard lock(mutex_);
                ++attempts_;
            }
            httplib::Client client(scheme_host_port_);
            client.set_connection_timeout(cfg_.timeout);
            client.set_read_timeout(cfg_.timeout);
            client.set_write_timeout(cfg_.timeout);
            httplib::Headers headers{{"X-Request-Id", request_id}};
            if (!cfg_.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.bearer_token);
            res = client.Post(path_prefix_ + path, headers, payload, "application/json");
        }

        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (retryable_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("judge replied HTTP " + std::to_string(res->status) + " on " + path);
        }
        auto reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.is_object()) {
            throw ProtocolError("judge reply on " + path + " is not a JSON object");
        }
        return reply;
    }
    throw JudgeUnavailable("judge at " + cfg_.base_url + path + " unavailable after " +
                               std::to_string(cfg_.max_retries) + " retries (" + last_error + ")",
                           "");
}

RemoteWinner JudgeGateway::compare(const std::string& prompt, const std::string& response_a,
                                   const std::string& response_b, const std::string& request_id) {
    require_non_empty(prompt, "prompt");
    require_non_empty(response_a, "response_a");
    require_non_empty(response_b, "response_b");
    const nlohmann::json body = {{"prompt", apply_template(cfg_.prompt_template_compare, prompt)},
                                 {"response_a", response_a},
                                 {"response_b", response_b}};
    const auto reply = post("/v1/compare", body, request_id.empty() ? next_request_id() : request_id);
    auto it = reply.find("winner");
    if (it == reply.end() || !it->is_string()) throw ProtocolError("compare reply lacks a string 'winner'");
    const auto& w = it->get_ref<const std::string&>();
    if (w == "a") return RemoteWinner::a;
    if (w == "b") return RemoteWinner::b;
    if (w == "tie") return RemoteWinner::tie;
    throw ProtocolError("compare reply has invalid winner '" + w + "'");
}

double JudgeGateway::score(const std::string& prompt, const std::string& response, const std::string& request_id) {
    require_non_empty(prompt, "prompt");
    require_non_empty(response, "response");
    const nlohmann::json body = {{"prompt", apply_template(cfg_.prompt_template_score, prompt)},
                                 {"response", response}};
    const auto reply = post("/v1/score", body, request_id.empty() ? next_request_id() : request_id);
    auto it = reply.find("score");
    if (it == reply.end() || !it->is_number()) throw ProtocolError("score reply lacks a numeric 'score'");
    const double s = it->get<double>();
    if (!(s >= 1.0 && s <= 5.0)) throw ProtocolError("score " + std::to_string(s) + " outside [1, 5]");
    return s;
}

std::vector<JudgeGateway::Settled> JudgeGateway::settle_batch(std::span<const CompareRequest> requests) {
    std::vector<Settled> out(requests.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            const auto& r = requests[i];
            try {
                out[i].winner = compare(r.prompt, r.response_a, r.response_b, r.request_id);
            } catch (...) {
                out[i].error = std::current_exception();
            }
        }
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg_.max_in_flight), requests.size());
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
    for (auto& t : workers) t.join();
    return out;
}

std::vector<RemoteWinner> JudgeGateway::compare_batch(std::span<const CompareRequest> requests) {
    auto settled = settle_batch(requests);
    std::vector<RemoteWinner> out;
    out.reserve(settled.size());
    for (auto& s : settled) {
        if (s.error) std::rethrow_exception(s.error);
        out.push_back(*s.winner);
    }
    return out;
}

RemoteWinner remote_compare(const GatewayConfig& cfg, const std::string& prompt,
                            const std::string& response_a, const std::string& response_b) {
    JudgeGateway gw(cfg);
    return gw.compare(prompt, response_a, response_b);
}

double remote_score(const GatewayConfig& cfg, const std::string& prompt, const std::string& response) {
    JudgeGateway gw(cfg);
    return gw.score(prompt, response);
}

}  // namespace elo_arena
