#include "elo_arena/judging.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "elo_arena/errors.hpp"
#include "elo_arena/normal.hpp"

namespace elo_arena {

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void LengthDistribution::validate() const {
    if (min_words < 0 || max_words < min_words) {
        throw InvalidArgument("length distribution needs 0 <= min_words <= max_words");
    }
}

int LengthDistribution::sample(Rng& rng) const {
    if (min_words == max_words) return min_words;
    std::uniform_int_distribution<int> dist(min_words, max_words);
    return dist(rng);
}

int count_words(std::string_view text) {
    int words = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

const char* to_string(JudgeKind kind) {
    switch (kind) {
        case JudgeKind::thurstone_comparison: return "thurstone_comparison";
        case JudgeKind::noisy_absolute: return "noisy_absolute";
        case JudgeKind::remote: return "remote";
    }
    return "?";
}

JudgeKind judge_kind_from_string(const std::string& s) {
    if (s == "thurstone_comparison") return JudgeKind::thurstone_comparison;
    if (s == "noisy_absolute") return JudgeKind::noisy_absolute;
    if (s == "remote") return JudgeKind::remote;
    throw InvalidJudge("unknown judge kind '" + s + "'");
}

void JudgeModel::validate() const {
    switch (kind) {
        case JudgeKind::thurstone_comparison:
            if (!(sigma_comp > 0.0) || !std::isfinite(sigma_comp)) throw InvalidJudge("sigma_comp must be > 0");
            break;
        case JudgeKind::noisy_absolute:
            if (!(sigma_abs >= 0.0) || !std::isfinite(sigma_abs)) throw InvalidJudge("sigma_abs must be >= 0");
            break;
        case JudgeKind::remote:
            if (!gateway) throw InvalidJudge("remote judge needs a gateway");
            break;
    }
}

const char* to_string(Winner w) {
    switch (w) {
        case Winner::policy: return "policy";
        case Winner::opponent: return "opponent";
        case Winner::tie: return "tie";
    }
    return "?";
}

Winner winner_from_string(const std::string& s) {
    if (s == "policy") return Winner::policy;
    if (s == "opponent") return Winner::opponent;
    if (s == "tie") return Winner::tie;
    throw InvalidArgument("unknown winner '" + s + "'");
}

Winner from_remote(RemoteWinner w) {
    switch (w) {
        case RemoteWinner::a: return Winner::policy;
        case RemoteWinner::b: return Winner::opponent;
        case RemoteWinner::tie: return Winner::tie;
    }
    return Winner::tie;
}

Verdict compare_thurstone(const ResponseSample& policy, const ResponseSample& opponent,
                          const JudgeModel& judge, Rng& rng) {
    if (judge.kind != JudgeKind::thurstone_comparison) {
        throw InvalidJudge("compare_thurstone requires a thurstone_comparison judge");
    }
    judge.validate();
    const double p_win = normal_cdf((policy.quality - opponent.quality) / judge.sigma_comp);
    return Verdict::from_winner(uniform01(rng) < p_win ? Winner::policy : Winner::opponent);
}

Verdict compare_via_scores(const ResponseSample& policy, const ResponseSample& opponent,
                           const JudgeModel& judge, Rng& rng) {
    if (judge.kind != JudgeKind::noisy_absolute) {
        throw InvalidJudge("compare_via_scores requires a noisy_absolute judge");
    }
    judge.validate();
    std::normal_distribution<double> noise(0.0, 1.0);
    const double score_policy = policy.quality + judge.sigma_abs * noise(rng);
    const double score_opponent = opponent.quality + judge.sigma_abs * noise(rng);
    if (score_policy > score_opponent) return Verdict::from_winner(Winner::policy);
    if (score_policy < score_opponent) return Verdict::from_winner(Winner::opponent);
    return Verdict::from_winner(Winner::tie);
}

Verdict apply_length_guard(Verdict verdict, int policy_words, int opponent_words, int threshold) {
    if (policy_words - opponent_words > threshold) return Verdict::from_winner(Winner::opponent);
    return verdict;
}

std::uint64_t JudgeCall::seed(std::uint64_t judge_seed) const {
    return derive_seed(judge_seed, {iteration, hash_string(prompt_id), slot, output_index});
}

std::string render_sample(const ResponseSample& sample) {
    if (sample.text) return *sample.text;
    std::ostringstream os;
    os << std::setprecision(17) << "[surrogate quality=" << sample.quality << " words=" << sample.word_count << "]";
    return os.str();
}

MatchRecord make_record(const JudgeCall& call, Verdict verdict, const ResponseSample& policy,
                        const ResponseSample& opponent, int threshold) {
    verdict = apply_length_guard(verdict, policy.word_count, opponent.word_count, threshold);
    return {call.iteration, call.prompt_id,         call.opponent_id,      call.output_index,
            verdict.winner, verdict.reward, policy.word_count, opponent.word_count};
}

MatchRecord judge_pair(const JudgeCall& call, const ResponseSample& policy, const ResponseSample& opponent,
                       const JudgeModel& judge, int threshold) {
    if (threshold < 0) throw InvalidArgument("length guard threshold must be >= 0");
    Rng rng(call.seed(judge.rng_seed));
    Verdict verdict;
    switch (judge.kind) {
        case JudgeKind::thurstone_comparison:
            verdict = compare_thurstone(policy, opponent, judge, rng);
            break;
        case JudgeKind::noisy_absolute:
            verdict = compare_via_scores(policy, opponent, judge, rng);
            break;
        case JudgeKind::remote: {
            judge.validate();
            const std::string& prompt = call.prompt_text.empty() ? call.prompt_id : call.prompt_text;
            try {
                verdict = Verdict::from_winner(
                    from_remote(judge.gateway->compare(prompt, render_sample(policy), render_sample(opponent))));
            } catch (const JudgeUnavailable& e) {
                throw JudgeUnavailable(e.what(), call.prompt_id);
            }
            break;
        }
    }
    return make_record(call, verdict, policy, opponent, threshold);
}

}  // namespace elo_arena
