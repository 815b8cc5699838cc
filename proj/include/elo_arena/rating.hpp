#ifndef ELO_ARENA_RATING_HPP
#define ELO_ARENA_RATING_HPP

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "elo_arena/errors.hpp"

namespace elo_arena {

using AgentId = std::string;

inline constexpr double kDefaultKFactor = 32.0;
inline constexpr double kInitialPolicyRating = 1350.0;

/// Logistic expected score of `self` against `opp`: 1 / (1 + 10^((opp - self)/400)).
template <typename Scalar>
Scalar expected_score(Scalar rating_self, Scalar rating_opp) {
    if (!std::isfinite(rating_self) || !std::isfinite(rating_opp)) {
        throw InvalidArgument("expected_score: ratings must be finite");
    }
    return Scalar(1) / (Scalar(1) + std::pow(Scalar(10), (rating_opp - rating_self) / Scalar(400)));
}

/// Rating at which expected_score(R, rating_opp) equals win_prob.
template <typename Scalar>
Scalar stationary_rating(Scalar win_prob, Scalar rating_opp) {
    if (!(win_prob > Scalar(0) && win_prob < Scalar(1))) {
        throw InvalidArgument("stationary_rating: win_prob must lie in (0, 1)");
    }
    return rating_opp - Scalar(400) * std::log10(Scalar(1) / win_prob - Scalar(1));
}

/// One judged match from the updated agent's point of view. `expected` is
/// computed from the ratings in force at the start of the batch.
struct MatchOutcome {
    AgentId opponent_id;
    double score = 0.0;
    double expected = 0.5;
};

/// Elo ratings for the policy and its opponent pool.
class RatingTable {
public:
    explicit RatingTable(double k_factor = kDefaultKFactor);

    void add(const AgentId& id, double rating);
    bool contains(const AgentId& id) const { return entries_.count(id) != 0; }
    double rating(const AgentId& id) const;
    double k_factor() const { return k_factor_; }

    /// Agent ids in sorted order.
    std::vector<AgentId> ids() const;
    const std::map<AgentId, double>& entries() const { return entries_; }

    /// Builds an outcome for `agent` against `opponent` using the current ratings.
    MatchOutcome outcome(const AgentId& agent, const AgentId& opponent, double score) const;

    bool operator==(const RatingTable&) const = default;

private:
    friend RatingTable update_batch(const RatingTable&, const AgentId&, std::span<const MatchOutcome>);

    std::map<AgentId, double> entries_;
    double k_factor_;
};

/// Applies R += K * Σ (S_i - E_i) to `agent` only. Opponents are frozen anchors.
RatingTable update_batch(const RatingTable& table, const AgentId& agent,
                         std::span<const MatchOutcome> outcomes);

/// The increment K * Σ (S_i - E_i), accumulated in outcome order.
double batch_delta(double k_factor, std::span<const MatchOutcome> outcomes);

}  // namespace elo_arena

#endif
