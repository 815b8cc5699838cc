#ifndef ELO_ARENA_JUDGING_HPP
#define ELO_ARENA_JUDGING_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "elo_arena/judge_gateway.hpp"
#include "elo_arena/random.hpp"
#include "elo_arena/rating.hpp"

namespace elo_arena {

inline constexpr int kDefaultLengthGuard = 300;

/// One response: latent quality plus its length in words.
struct ResponseSample {
    double quality = 0.0;
    int word_count = 0;
    std::optional<std::string> text;

    bool operator==(const ResponseSample&) const = default;
};

/// Uniform integer word counts in [min_words, max_words].
struct LengthDistribution {
    int min_words = 200;
    int max_words = 200;

    void validate() const;
    int sample(Rng& rng) const;
};

/// Number of maximal runs of non-whitespace characters.
int count_words(std::string_view text);

enum class JudgeKind { thurstone_comparison, noisy_absolute, remote };

const char* to_string(JudgeKind kind);
JudgeKind judge_kind_from_string(const std::string& s);

struct JudgeModel {
    JudgeKind kind = JudgeKind::thurstone_comparison;
    double sigma_comp = 1.0;
    double sigma_abs = 0.0;
    std::uint64_t rng_seed = 0;
    std::shared_ptr<JudgeGateway> gateway;  // required for kind == remote

    void validate() const;
};

enum class Winner { policy, opponent, tie };

const char* to_string(Winner w);
Winner winner_from_string(const std::string& s);

/// Judge decision. Only a policy win earns reward 1; ties pay 0.
struct Verdict {
    Winner winner = Winner::tie;
    double reward = 0.0;

    static Verdict from_winner(Winner w) { return {w, w == Winner::policy ? 1.0 : 0.0}; }
    bool operator==(const Verdict&) const = default;
};

/// Thurstone judge: the policy wins with probability Φ((q_policy - q_opp) / σ_comp).
Verdict compare_thurstone(const ResponseSample& policy, const ResponseSample& opponent,
                          const JudgeModel& judge, Rng& rng);

/// Absolute-scoring judge: each response gets q + N(0, σ_abs²) independently and
/// the strictly higher score wins.
Verdict compare_via_scores(const ResponseSample& policy, const ResponseSample& opponent,
                           const JudgeModel& judge, Rng& rng);

/// Forces a loss when the policy's response is more than `threshold` words
/// longer than the opponent's.
Verdict apply_length_guard(Verdict verdict, int policy_words, int opponent_words,
                           int threshold = kDefaultLengthGuard);

/// Identifies one judged pair inside a run.
struct JudgeCall {
    std::uint64_t iteration = 0;
    std::string prompt_id;
    std::string prompt_text;  // remote judges only; defaults to prompt_id
    AgentId opponent_id;
    std::uint64_t slot = 0;  // position of the prompt in its batch
    std::uint64_t output_index = 0;

    /// Per-call seed: independent of the order in which calls are evaluated.
    std::uint64_t seed(std::uint64_t judge_seed) const;
};

struct MatchRecord {
    std::uint64_t iteration = 0;
    std::string prompt_id;
    AgentId opponent_id;
    std::uint64_t output_index = 0;
    Winner winner = Winner::tie;
    double reward = 0.0;
    int policy_words = 0;
    int opponent_words = 0;

    bool operator==(const MatchRecord&) const = default;
};

/// Text sent to a remote judge for a simulated sample with no text of its own.
std::string render_sample(const ResponseSample& sample);

/// Judges one policy output against a cached opponent response and applies
/// the length guard.
MatchRecord judge_pair(const JudgeCall& call, const ResponseSample& policy, const ResponseSample& opponent,
                       const JudgeModel& judge, int threshold = kDefaultLengthGuard);

/// Packages a verdict produced elsewhere (e.g. by a batched remote call).
MatchRecord make_record(const JudgeCall& call, Verdict verdict, const ResponseSample& policy,
                        const ResponseSample& opponent, int threshold);

Winner from_remote(RemoteWinner w);

}  // namespace elo_arena

#endif
