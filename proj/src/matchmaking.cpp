#include "elo_arena/matchmaking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace elo_arena {

namespace {

void check_temperature(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("temperature must be positive and finite");
}

}  // namespace

SelectionDistribution selection_distribution(const RatingTable& table, const AgentId& policy_id,
                                             std::span<const AgentId> opponent_ids, double temperature) {
    check_temperature(temperature);
    if (opponent_ids.empty()) throw InvalidArgument("selection_distribution: empty opponent list");

    const double self = table.rating(policy_id);
    std::vector<double> distance(opponent_ids.size());
    for (std::size_t k = 0; k < opponent_ids.size(); ++k) {
        distance[k] = std::abs(self - table.rating(opponent_ids[k]));
    }
    // Shift by the smallest distance so the nearest opponent has weight exp(0).
    const double nearest = *std::min_element(distance.begin(), distance.end());

    SelectionDistribution dist(opponent_ids.size());
    double total = 0.0;
    for (std::size_t k = 0; k < opponent_ids.size(); ++k) {
        const double w = std::exp(-(distance[k] - nearest) / temperature);
        dist[k] = {opponent_ids[k], w};
        total += w;
    }
    for (auto& p : dist) p.probability /= total;
    return dist;
}

AgentId sample_opponent(const SelectionDistribution& dist, Rng& rng) {
    if (dist.empty()) throw InvalidArgument("sample_opponent: empty distribution");
    double total = 0.0;
    for (const auto& p : dist) {
        if (!(p.probability >= 0.0) || !std::isfinite(p.probability)) {
            throw InvalidArgument("sample_opponent: invalid probability");
        }
        total += p.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("sample_opponent: probabilities do not sum to 1");

    // 53-bit uniform in [0, 1); generate_canonical is not guaranteed < 1 on all toolchains.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
    double cumulative = 0.0;
    for (const auto& p : dist) {
        cumulative += p.probability;
        if (u < cumulative) return p.id;
    }
    // Rounding can leave u just above the final cumulative sum.
    for (auto it = dist.rbegin(); it != dist.rend(); ++it) {
        if (it->probability > 0.0) return it->id;
    }
    return dist.back().id;
}

OpponentSampler::OpponentSampler(SelectionPolicy policy) : policy_(policy), rng_(policy.rng_seed) {
    check_temperature(policy.temperature);
}

}  // namespace elo_arena
