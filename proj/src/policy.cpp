#include "elo_arena/policy.hpp"

#include <random>

namespace elo_arena {

SurrogatePolicy SurrogatePolicy::at(double skill, double spread) {
    SurrogatePolicy p;
    p.skill = p.skill_old = p.skill_ref = skill;
    p.spread = spread;
    return p;
}

void SurrogatePolicy::validate() const {
    if (!std::isfinite(skill) || !std::isfinite(skill_old) || !std::isfinite(skill_ref)) {
        throw InvalidArgument("policy skills must be finite");
    }
    if (!(spread > 0.0) || !std::isfinite(spread)) throw InvalidArgument("policy spread must be > 0");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw InvalidArgument("clip_epsilon must lie in (0, 1)");
    if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta)) throw InvalidArgument("kl_beta must be >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be > 0");
}

AdvantageGroup normalize_advantages(std::span<const double> rewards) {
    if (rewards.size() < 2) throw InvalidArgument("advantage group needs at least 2 rewards");
    AdvantageGroup g;
    g.rewards = Eigen::Map<const Eigen::VectorXd>(rewards.data(), static_cast<Eigen::Index>(rewards.size()));
    g.advantages = group_normalize(g.rewards);
    return g;
}

std::vector<ResponseSample> sample_outputs(const SurrogatePolicy& policy, int count, std::uint64_t seed,
                                           const LengthDistribution& lengths) {
    if (count < 2) throw InvalidArgument("sample_outputs: group size must be >= 2");
    policy.validate();
    lengths.validate();
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<ResponseSample> out(static_cast<std::size_t>(count));
    for (auto& s : out) {
        s.quality = policy.skill_old + policy.spread * noise(rng);
        s.word_count = lengths.sample(rng);
    }
    return out;
}

namespace {

void check_group(const PolicyGroup& g) {
    if (static_cast<Eigen::Index>(g.outputs.size()) != g.advantages.size()) {
        throw InvalidArgument("outputs and advantages differ in length");
    }
    if (g.outputs.empty()) throw InvalidArgument("empty output group");
}

double group_surrogate(const SurrogatePolicy& p, const PolicyGroup& g) {
    double sum = 0.0;
    for (std::size_t i = 0; i < g.outputs.size(); ++i) {
        const double ratio = gaussian_ratio(g.outputs[i].quality, p.skill, p.skill_old, p.spread);
        sum += clipped_surrogate(ratio, g.advantages[static_cast<Eigen::Index>(i)], p.clip_epsilon);
    }
    return sum / static_cast<double>(g.outputs.size());
}

double group_surrogate_gradient(const SurrogatePolicy& p, const PolicyGroup& g) {
    const double var = p.spread * p.spread;
    const double lo = 1.0 - p.clip_epsilon;
    const double hi = 1.0 + p.clip_epsilon;
    double sum = 0.0;
    for (std::size_t i = 0; i < g.outputs.size(); ++i) {
        const double o = g.outputs[i].quality;
        const double adv = g.advantages[static_cast<Eigen::Index>(i)];
        const double ratio = gaussian_ratio(o, p.skill, p.skill_old, p.spread);
        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, lo, hi) * adv;
        const bool ratio_active = unclipped <= clipped || (ratio >= lo && ratio <= hi);
        if (ratio_active) sum += adv * ratio * (o - p.skill) / var;
    }
    return sum / static_cast<double>(g.outputs.size());
}

std::vector<PolicyGroup> single_group(std::span<const ResponseSample> outputs, const Eigen::VectorXd& advantages) {
    return {PolicyGroup{{outputs.begin(), outputs.end()}, advantages}};
}

}  // namespace

ObjectiveTerms grpo_objective_terms(const SurrogatePolicy& policy, std::span<const PolicyGroup> groups) {
    policy.validate();
    if (groups.empty()) throw InvalidArgument("grpo objective needs at least one group");
    ObjectiveTerms t;
    for (const auto& g : groups) {
        check_group(g);
        t.surrogate += group_surrogate(policy, g);
    }
    t.surrogate /= static_cast<double>(groups.size());
    t.kl = gaussian_kl(policy.skill, policy.skill_ref, policy.spread);
    t.objective = t.surrogate - policy.kl_beta * t.kl;
    return t;
}

double grpo_objective(const SurrogatePolicy& policy, std::span<const PolicyGroup> groups) {
    return grpo_objective_terms(policy, groups).objective;
}

double grpo_objective(const SurrogatePolicy& policy, std::span<const ResponseSample> outputs,
                      const Eigen::VectorXd& advantages) {
    return grpo_objective(policy, single_group(outputs, advantages));
}

double grpo_gradient(const SurrogatePolicy& policy, std::span<const PolicyGroup> groups) {
    policy.validate();
    if (groups.empty()) throw InvalidArgument("grpo gradient needs at least one group");
    double surrogate = 0.0;
    for (const auto& g : groups) {
        check_group(g);
        surrogate += group_surrogate_gradient(policy, g);
    }
    surrogate /= static_cast<double>(groups.size());
    const double kl_grad = (policy.skill - policy.skill_ref) / (policy.spread * policy.spread);
    return surrogate - policy.kl_beta * kl_grad;
}

double grpo_gradient(const SurrogatePolicy& policy, std::span<const ResponseSample> outputs,
                     const Eigen::VectorXd& advantages) {
    return grpo_gradient(policy, single_group(outputs, advantages));
}

SurrogatePolicy grpo_step(const SurrogatePolicy& policy, std::span<const PolicyGroup> groups) {
    SurrogatePolicy next = policy;
    next.skill += policy.learning_rate * grpo_gradient(policy, groups);
    next.skill_old = next.skill;
    return next;
}

SurrogatePolicy grpo_step(const SurrogatePolicy& policy, std::span<const ResponseSample> outputs,
                          const Eigen::VectorXd& advantages) {
    return grpo_step(policy, single_group(outputs, advantages));
}

}  // namespace elo_arena
