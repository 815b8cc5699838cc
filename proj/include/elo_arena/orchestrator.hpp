#ifndef ELO_ARENA_ORCHESTRATOR_HPP
#define ELO_ARENA_ORCHESTRATOR_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "elo_arena/cache.hpp"
#include "elo_arena/judging.hpp"
#include "elo_arena/matchmaking.hpp"
#include "elo_arena/policy.hpp"
#include "elo_arena/rating.hpp"

namespace elo_arena {

struct PolicySpec {
    AgentId id = "policy";
    double init_skill = 0.0;
    double spread = 1.0;
    double init_elo = kInitialPolicyRating;
    LengthDistribution lengths;
};

struct JudgeSpec {
    JudgeKind kind = JudgeKind::thurstone_comparison;
    double sigma_comp = 1.0;
    double sigma_abs = 1.0;
    std::optional<std::uint64_t> seed;  // defaults to a value derived from the run seed
    GatewayConfig gateway;
};

struct RunConfig {
    std::uint64_t seed = 0;
    int iterations = 100;
    int batch_size = 8;
    int group_size = kDefaultGroupSize;
    double temperature = 200.0;
    double k_factor = kDefaultKFactor;
    double clip_epsilon = kDefaultClipEpsilon;
    double kl_beta = kDefaultKlBeta;
    double learning_rate = 0.05;
    int length_guard = kDefaultLengthGuard;
    PolicySpec policy;
    std::vector<OpponentSpec> opponents;
    JudgeSpec judge;

    /// Throws ConfigError on any violated invariant.
    void validate() const;
    std::vector<AgentId> opponent_ids() const;
    RatingTable initial_table() const;
    SurrogatePolicy initial_policy() const;
};

/// Three opponents seeded at 1400/1700/2000 Elo with skills 0/1/2.
std::vector<OpponentSpec> default_opponents();

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
RunConfig load_config(const std::string& path);

struct IterationSummary {
    std::uint64_t iteration = 0;
    double policy_elo = 0.0;   // after this iteration's update
    double policy_skill = 0.0; // after this iteration's step
    double mean_reward = 0.0;
    std::vector<int> selection_counts;            // aligned with RunConfig::opponents
    std::vector<double> selection_probabilities;  // at iteration start
    double weighted_opponent_rating = 0.0;        // Σ p_k R(M_k) at iteration start
    double mean_abs_advantage = 0.0;
    double objective = 0.0;
    double kl_term = 0.0;

    bool operator==(const IterationSummary&) const = default;
};

/// Streams the per-iteration logs: ratings.csv, selection.csv, training.csv
/// and matches.jsonl.
class RunLog {
public:
    RunLog(std::ostream& ratings, std::ostream& selection, std::ostream& training, std::ostream& matches);

    void write_headers();
    void ratings_row(std::uint64_t iteration, const RatingTable& table);
    void selection_rows(std::uint64_t iteration, std::span<const AgentId> ids, const IterationSummary& s);
    void training_row(const IterationSummary& s);
    void match(const MatchRecord& r);
    void flush();

private:
    std::ostream& ratings_;
    std::ostream& selection_;
    std::ostream& training_;
    std::ostream& matches_;
};

/// Owns the log files of one run inside a directory (created if needed).
class DirectoryRunLog {
public:
    explicit DirectoryRunLog(const std::filesystem::path& dir);
    RunLog& log() { return *log_; }

private:
    std::ofstream ratings_, selection_, training_, matches_;
    std::unique_ptr<RunLog> log_;
};

struct RunResult {
    std::vector<IterationSummary> summaries;
    std::vector<MatchRecord> matches;
    std::vector<double> policy_elo_trajectory;  // [0] is the initial rating
    RatingTable final_table;
    SurrogatePolicy final_policy;
};

/// Runs the competitive training loop. Each iteration samples B prompts with
/// replacement, draws one opponent per prompt, judges G policy outputs against
/// the cached opponent response, takes one GRPO step over the batch, and then
/// moves the policy's Elo once using expected scores from the iteration start.
///
/// Throws CacheMiss if the cache lacks a (prompt, opponent) pair and
/// JudgeUnavailable if a remote judge fails; matches completed before a judge
/// failure are written to `log` first.
RunResult run(const RunConfig& config, const ResponseCache& cache, RunLog* log = nullptr);

/// Reads matches.jsonl records.
std::vector<MatchRecord> read_match_log(std::istream& in);
std::vector<MatchRecord> load_match_log(const std::string& path);

/// Recomputes the policy's Elo trajectory from match records. Entry 0 is the
/// initial rating, entry t the rating after iteration t.
std::vector<double> replay(std::span<const MatchRecord> matches, const RatingTable& initial, const AgentId& policy_id);

struct SweepResult {
    double temperature = 0.0;
    std::vector<IterationSummary> summaries;
    double final_elo = 0.0;
    double tail_mean_elo = 0.0;  // mean policy Elo over the last 10% of iterations
};

/// One run per temperature with a shared seed and cache. When `out_dir` is
/// given, each run logs into `out_dir/T<temperature>/` and a summary table is
/// written to `out_dir/sweep.csv`.
std::vector<SweepResult> temperature_sweep(const RunConfig& base, const ResponseCache& cache,
                                           std::span<const double> temperatures,
                                           const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Mean of `values` over consecutive windows of `window` entries (a trailing
/// partial window is dropped).
std::vector<double> windowed_means(std::span<const double> values, std::size_t window);

double tail_mean(std::span<const double> values, double fraction);

/// Text used for the rating columns: fixed with 6 decimals.
std::string format_rating(double rating);

}  // namespace elo_arena

#endif
