#ifndef ELO_ARENA_POLICY_HPP
#define ELO_ARENA_POLICY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "elo_arena/errors.hpp"
#include "elo_arena/judging.hpp"

namespace elo_arena {

inline constexpr double kDefaultClipEpsilon = 0.2;
inline constexpr double kDefaultKlBeta = 0.001;
inline constexpr int kDefaultGroupSize = 8;

/// Scalar Gaussian stand-in for an LLM policy: response quality ~ N(skill, spread²).
/// skill_old is the sampling snapshot; skill_ref anchors the KL penalty.
struct SurrogatePolicy {
    double skill = 0.0;
    double spread = 1.0;
    double skill_old = 0.0;
    double skill_ref = 0.0;
    double clip_epsilon = kDefaultClipEpsilon;
    double kl_beta = kDefaultKlBeta;
    double learning_rate = 0.05;

    /// A fresh policy where current, old and reference parameters coincide.
    static SurrogatePolicy at(double skill, double spread);

    void validate() const;
    bool operator==(const SurrogatePolicy&) const = default;
};

/// Probability ratio N(o; skill, s²) / N(o; skill_old, s²).
template <typename Scalar>
Scalar gaussian_ratio(Scalar output, Scalar skill, Scalar skill_old, Scalar spread) {
    const Scalar a = output - skill_old;
    const Scalar b = output - skill;
    return std::exp((a * a - b * b) / (Scalar(2) * spread * spread));
}

/// KL(N(skill, s²) || N(skill_ref, s²)).
template <typename Scalar>
Scalar gaussian_kl(Scalar skill, Scalar skill_ref, Scalar spread) {
    const Scalar d = skill - skill_ref;
    return d * d / (Scalar(2) * spread * spread);
}

/// min(ρA, clip(ρ, 1-ε, 1+ε)A).
template <typename Scalar>
Scalar clipped_surrogate(Scalar ratio, Scalar advantage, Scalar epsilon) {
    const Scalar clipped = std::clamp(ratio, Scalar(1) - epsilon, Scalar(1) + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

/// Group-normalized advantages (r - mean) / std with the population std.
/// A constant group maps to all zeros.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> group_normalize(const Eigen::MatrixBase<Derived>& rewards) {
    using Scalar = typename Derived::Scalar;
    if (rewards.size() < 2) throw InvalidArgument("advantage group needs at least 2 rewards");
    const Scalar mean = rewards.mean();
    const auto centered = (rewards.array() - mean).matrix().eval();
    const Scalar sd = std::sqrt(centered.squaredNorm() / Scalar(rewards.size()));
    // Equal rewards can still leave a rounding-level spread.
    const Scalar scale = rewards.cwiseAbs().maxCoeff();
    if (sd <= Scalar(64) * std::numeric_limits<Scalar>::epsilon() * std::max(scale, Scalar(1))) {
        return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(rewards.size());
    }
    return centered / sd;
}

struct AdvantageGroup {
    Eigen::VectorXd rewards;
    Eigen::VectorXd advantages;

    Eigen::Index group_size() const { return rewards.size(); }
};

AdvantageGroup normalize_advantages(std::span<const double> rewards);

/// G outputs drawn i.i.d. from N(skill_old, spread²), with word counts from `lengths`.
std::vector<ResponseSample> sample_outputs(const SurrogatePolicy& policy, int count, std::uint64_t seed,
                                           const LengthDistribution& lengths = {0, 0});

/// The outputs of one prompt together with their advantages.
struct PolicyGroup {
    std::vector<ResponseSample> outputs;
    Eigen::VectorXd advantages;
};

struct ObjectiveTerms {
    double objective = 0.0;  // surrogate - kl_beta * kl
    double surrogate = 0.0;  // batch mean of the per-group clipped means
    double kl = 0.0;
};

/// Clipped GRPO objective averaged uniformly over groups, minus β·KL.
ObjectiveTerms grpo_objective_terms(const SurrogatePolicy& policy, std::span<const PolicyGroup> groups);
double grpo_objective(const SurrogatePolicy& policy, std::span<const PolicyGroup> groups);
double grpo_objective(const SurrogatePolicy& policy, std::span<const ResponseSample> outputs,
                      const Eigen::VectorXd& advantages);

/// d(objective)/d(skill). A term whose clipped branch is selected and binding
/// contributes nothing.
double grpo_gradient(const SurrogatePolicy& policy, std::span<const PolicyGroup> groups);
double grpo_gradient(const SurrogatePolicy& policy, std::span<const ResponseSample> outputs,
                     const Eigen::VectorXd& advantages);

/// One ascent step on the skill, then skill_old <- skill.
SurrogatePolicy grpo_step(const SurrogatePolicy& policy, std::span<const PolicyGroup> groups);
SurrogatePolicy grpo_step(const SurrogatePolicy& policy, std::span<const ResponseSample> outputs,
                          const Eigen::VectorXd& advantages);

}  // namespace elo_arena

#endif
