#ifndef ELO_ARENA_MATCHMAKING_HPP
#define ELO_ARENA_MATCHMAKING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "elo_arena/random.hpp"
#include "elo_arena/rating.hpp"

namespace elo_arena {

struct SelectionPolicy {
    double temperature = 200.0;
    std::uint64_t rng_seed = 0;
};

struct SelectionProbability {
    AgentId id;
    double probability = 0.0;
};

using SelectionDistribution = std::vector<SelectionProbability>;

/// Distance-based softmax over opponents: p_k ∝ exp(-|R(policy) - R(k)| / T).
/// Output order follows `opponent_ids`.
SelectionDistribution selection_distribution(const RatingTable& table, const AgentId& policy_id,
                                             std::span<const AgentId> opponent_ids, double temperature);

/// Inverse-CDF draw over the distribution in its stored order.
AgentId sample_opponent(const SelectionDistribution& dist, Rng& rng);

/// Stateful sampler that owns one generator per run.
class OpponentSampler {
public:
    explicit OpponentSampler(SelectionPolicy policy);

    double temperature() const { return policy_.temperature; }
    AgentId sample(const SelectionDistribution& dist) { return sample_opponent(dist, rng_); }

private:
    SelectionPolicy policy_;
    Rng rng_;
};

}  // namespace elo_arena

#endif
