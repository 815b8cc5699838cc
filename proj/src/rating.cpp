#include "elo_arena/rating.hpp"

namespace elo_arena {

RatingTable::RatingTable(double k_factor) : k_factor_(k_factor) {
    if (!(k_factor > 0.0) || !std::isfinite(k_factor)) {
        throw InvalidArgument("k_factor must be a positive finite number");
    }
}

void RatingTable::add(const AgentId& id, double rating) {
    if (!std::isfinite(rating)) throw InvalidArgument("rating for '" + id + "' is not finite");
    if (!entries_.emplace(id, rating).second) {
        throw InvalidArgument("agent '" + id + "' already present in rating table");
    }
}

double RatingTable::rating(const AgentId& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw MissingAgent(id);
    return it->second;
}

std::vector<AgentId> RatingTable::ids() const {
    std::vector<AgentId> out;
    out.reserve(entries_.size());
    for (const auto& [id, r] : entries_) out.push_back(id);
    return out;
}

MatchOutcome RatingTable::outcome(const AgentId& agent, const AgentId& opponent, double score) const {
    return {opponent, score, expected_score(rating(agent), rating(opponent))};
}

double batch_delta(double k_factor, std::span<const MatchOutcome> outcomes) {
    double sum = 0.0;
    for (const auto& o : outcomes) sum += o.score - o.expected;
    return k_factor * sum;
}

RatingTable update_batch(const RatingTable& table, const AgentId& agent,
                         std::span<const MatchOutcome> outcomes) {
    RatingTable next = table;
    auto it = next.entries_.find(agent);
    if (it == next.entries_.end()) throw MissingAgent(agent);
    for (const auto& o : outcomes) {
        if (!table.contains(o.opponent_id)) throw MissingAgent(o.opponent_id);
        if (o.score != 0.0 && o.score != 1.0) {
            throw InvalidArgument("match score must be 0 or 1");
        }
        if (!(o.expected > 0.0 && o.expected < 1.0)) {
            throw InvalidArgument("expected score must lie strictly inside (0, 1)");
        }
    }
    if (outcomes.empty()) return next;
    it->second += batch_delta(table.k_factor(), outcomes);
    return next;
}

}  // namespace elo_arena
