#ifndef ELO_ARENA_NOISE_LAB_HPP
#define ELO_ARENA_NOISE_LAB_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace elo_arena {

// ---------------------------------------------------------------------------
// Datasets

struct AbsoluteRecord {
    std::string item_id;
    int expert_quality = 1;  // 1..5
    std::vector<double> ratings;
};

/// Expert-annotated items, each rated several times by an absolute judge.
struct AbsoluteRatingDataset {
    std::vector<AbsoluteRecord> records;

    /// Throws InvalidArgument on an expert quality outside 1..5 and
    /// InsufficientReplication on an item with fewer than two ratings.
    void validate() const;
};

struct PairRecord {
    std::string pair_id;
    int gap = 1;  // expert quality difference, >= 1
    long wins_for_better = 0;
    long total = 0;
};

/// Pairwise judgments of responses whose expert qualities differ by `gap`.
struct PairwiseDataset {
    std::vector<PairRecord> records;

    void validate() const;
    std::vector<int> gaps() const;
};

/// Newline-delimited readers. Blank lines are skipped; a malformed line
/// throws InvalidArgument naming the line number.
AbsoluteRatingDataset read_absolute_dataset(std::istream& in);
PairwiseDataset read_pairwise_dataset(std::istream& in);
AbsoluteRatingDataset load_absolute_dataset(const std::string& path);
PairwiseDataset load_pairwise_dataset(const std::string& path);

// ---------------------------------------------------------------------------
// Absolute scoring

struct RegressionFit {
    double slope_a = 0.0;
    double intercept_b = 0.0;
    double r_squared = 0.0;
    double residual_std = 0.0;  // root-mean-square residual
};

/// OLS of the per-item mean rating on expert quality.
RegressionFit fit_absolute_regression(const AbsoluteRatingDataset& data);

/// Mean over items of the (n-1)-normalized variance of the repeated ratings.
double within_sample_variance(const AbsoluteRatingDataset& data);

/// √2 · residual_std / |slope_a|: ranking noise of score differencing,
/// expressed in expert-quality units.
double effective_ranking_noise(double slope_a, double residual_std);

// ---------------------------------------------------------------------------
// Pairwise comparison

/// Pooled judgments for one gap. Counts are real so that summary
/// accuracies can be used without rounding to whole wins.
struct GapAccuracy {
    double wins = 0.0;
    double total = 0.0;
    double accuracy() const { return wins / total; }
};

/// Wins and totals pooled over every pair with the given gap.
GapAccuracy pooled_accuracy(const PairwiseDataset& data, int gap);

/// Maximum-likelihood σ for p = Φ(gap/σ), found by bisection on the score
/// equation in log σ.
double thurstone_mle(const PairwiseDataset& data, int gap);
double thurstone_mle(GapAccuracy counts, int gap);

/// gap / Φ⁻¹(accuracy). Independent route to the same estimate.
double thurstone_closed_form(double accuracy, double gap);

/// σ_comp < √2·σ_abs.
bool superiority_check(double sigma_comp, double sigma_abs);

// ---------------------------------------------------------------------------
// Reporting

struct NoiseReport {
    RegressionFit fit;
    double within_variance = 0.0;
    double sigma_abs_eff = 0.0;
    std::map<int, double> sigma_comp_by_gap;
    std::map<int, GapAccuracy> counts_by_gap;
    std::vector<int> non_identifiable_gaps;
    int reference_gap = 1;  // gap whose σ_comp is the ratio denominator
    double noise_ratio = 0.0;
    bool superiority = false;
};

/// Runs the complete pipeline on raw datasets.
NoiseReport build_noise_report(const AbsoluteRatingDataset& absolute, const PairwiseDataset& pairwise);

/// Same pipeline starting from already-fitted absolute-scoring statistics.
NoiseReport noise_report_from_summary(const RegressionFit& fit, double within_variance,
                                      const PairwiseDataset& pairwise);
NoiseReport noise_report_from_summary(const RegressionFit& fit, double within_variance,
                                      const std::map<int, GapAccuracy>& counts_by_gap);

nlohmann::json to_json(const NoiseReport& report);
std::string format_noise_table(const NoiseReport& report);

// ---------------------------------------------------------------------------
// Sample-efficiency experiment

struct EfficiencyRow {
    int budget = 1;
    double misrank_comparison = 0.0;
    double misrank_absolute = 0.0;
    double se_comparison = 0.0;
    double se_absolute = 0.0;
    /// Standard error of (misrank_absolute - misrank_comparison) under the
    /// paired design: both arms share their underlying normal draws.
    double se_difference = 0.0;
};

/// For each budget n, estimates how often a better item is ranked below a
/// worse one (gap delta_q) by
///   - a majority vote over n Thurstone comparisons with noise sigma_comp, and
///   - comparing means of n absolute scores per item with noise sigma_abs.
/// Each repetition couples the arms through common random numbers: the k-th
/// comparison uses ξ_k and the k-th pair of scores uses noise (ξ_k ± η_k)/√2,
/// which leaves both marginal error rates exact. Ties are split by a fair coin.
std::vector<EfficiencyRow> sample_efficiency_experiment(double sigma_comp, double sigma_abs, double delta_q,
                                                        std::span<const int> budgets, int repetitions,
                                                        std::uint64_t seed = 0);

}  // namespace elo_arena

#endif
