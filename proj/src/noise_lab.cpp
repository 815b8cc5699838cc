#include "elo_arena/noise_lab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "elo_arena/errors.hpp"
#include "elo_arena/normal.hpp"
#include "elo_arena/random.hpp"

namespace elo_arena {

using nlohmann::json;

void AbsoluteRatingDataset::validate() const {
    for (const auto& r : records) {
        if (r.expert_quality < 1 || r.expert_quality > 5) {
            throw InvalidArgument("item '" + r.item_id + "': expert_quality must be in 1..5");
        }
        if (r.ratings.size() < 2) {
            throw InsufficientReplication("item '" + r.item_id + "' has fewer than 2 ratings");
        }
        for (double x : r.ratings) {
            if (!std::isfinite(x)) throw InvalidArgument("item '" + r.item_id + "' has a non-finite rating");
        }
    }
}

void PairwiseDataset::validate() const {
    for (const auto& r : records) {
        if (r.gap < 1) throw InvalidArgument("pair '" + r.pair_id + "': gap must be >= 1");
        if (r.total < 0 || r.wins_for_better < 0 || r.wins_for_better > r.total) {
            throw InvalidArgument("pair '" + r.pair_id + "': need 0 <= wins <= total");
        }
    }
}

std::vector<int> PairwiseDataset::gaps() const {
    std::set<int> g;
    for (const auto& r : records) g.insert(r.gap);
    return {g.begin(), g.end()};
}

namespace {

template <typename Parse>
auto read_lines(std::istream& in, Parse parse) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            parse(json::parse(line));
        } catch (const json::exception& e) {
            throw InvalidArgument("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::string id_field(const json& j, const char* key) {
    const auto& v = j.at(key);
    return v.is_string() ? v.get<std::string>() : v.dump();
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path);
    return in;
}

}  // namespace

AbsoluteRatingDataset read_absolute_dataset(std::istream& in) {
    AbsoluteRatingDataset data;
    read_lines(in, [&](const json& j) {
        data.records.push_back({id_field(j, "item_id"), j.at("expert_quality").get<int>(),
                                j.at("ratings").get<std::vector<double>>()});
    });
    data.validate();
    return data;
}

PairwiseDataset read_pairwise_dataset(std::istream& in) {
    PairwiseDataset data;
    read_lines(in, [&](const json& j) {
        data.records.push_back({id_field(j, "pair_id"), j.at("gap").get<int>(), j.at("wins").get<long>(),
                                j.at("total").get<long>()});
    });
    data.validate();
    return data;
}

AbsoluteRatingDataset load_absolute_dataset(const std::string& path) {
    auto in = open_input(path);
    return read_absolute_dataset(in);
}

PairwiseDataset load_pairwise_dataset(const std::string& path) {
    auto in = open_input(path);
    return read_pairwise_dataset(in);
}

RegressionFit fit_absolute_regression(const AbsoluteRatingDataset& data) {
    data.validate();
    const auto n = static_cast<Eigen::Index>(data.records.size());
    if (n < 2) throw DegenerateDesign("regression needs at least 2 items");

    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = data.records[static_cast<std::size_t>(i)];
        x[i] = r.expert_quality;
        y[i] = Eigen::Map<const Eigen::VectorXd>(r.ratings.data(), static_cast<Eigen::Index>(r.ratings.size())).mean();
    }

    const Eigen::VectorXd xc = x.array() - x.mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double sxx = xc.squaredNorm();
    if (sxx == 0.0) throw DegenerateDesign("all expert qualities are identical");

    RegressionFit fit;
    fit.slope_a = xc.dot(yc) / sxx;
    fit.intercept_b = y.mean() - fit.slope_a * x.mean();
    const Eigen::VectorXd residual = yc - fit.slope_a * xc;
    const double ss_res = residual.squaredNorm();
    const double ss_tot = yc.squaredNorm();
    // A constant response has nothing to explain; report R² = 0.
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 0.0;
    fit.residual_std = std::sqrt(ss_res / static_cast<double>(n));
    return fit;
}

double within_sample_variance(const AbsoluteRatingDataset& data) {
    data.validate();
    if (data.records.empty()) throw InsufficientReplication("dataset has no items");
    double total = 0.0;
    for (const auto& r : data.records) {
        const Eigen::Map<const Eigen::VectorXd> v(r.ratings.data(), static_cast<Eigen::Index>(r.ratings.size()));
        total += (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
    }
    return total / static_cast<double>(data.records.size());
}

double effective_ranking_noise(double slope_a, double residual_std) {
    if (!std::isfinite(slope_a) || !(residual_std >= 0.0) || !std::isfinite(residual_std)) {
        throw InvalidArgument("effective_ranking_noise: need finite slope and residual_std >= 0");
    }
    if (slope_a == 0.0) throw InfiniteNoise("regression slope is zero: scores carry no ranking signal");
    return std::numbers::sqrt2 * residual_std / std::abs(slope_a);
}

GapAccuracy pooled_accuracy(const PairwiseDataset& data, int gap) {
    data.validate();
    GapAccuracy acc;
    for (const auto& r : data.records) {
        if (r.gap != gap) continue;
        acc.wins += static_cast<double>(r.wins_for_better);
        acc.total += static_cast<double>(r.total);
    }
    if (acc.total == 0) throw InvalidArgument("no judgments for gap " + std::to_string(gap));
    return acc;
}

double thurstone_closed_form(double accuracy, double gap) {
    if (!(accuracy > 0.5)) throw NonIdentifiable("accuracy must exceed 0.5");
    if (!(accuracy < 1.0)) throw NonIdentifiable("accuracy of 1 drives the noise estimate to 0");
    return gap / normal_quantile(accuracy);
}

double thurstone_mle(GapAccuracy counts, int gap) {
    if (gap < 1) throw InvalidArgument("gap must be >= 1");
    if (!(counts.total > 0.0) || !(counts.wins >= 0.0) || counts.wins > counts.total) {
        throw InvalidArgument("gap " + std::to_string(gap) + ": need 0 <= wins <= total and total > 0");
    }
    const double acc = counts.accuracy();
    if (!(acc > 0.5)) {
        throw NonIdentifiable("gap " + std::to_string(gap) + ": accuracy " + std::to_string(acc) +
                              " <= 0.5, comparison noise is unbounded");
    }
    if (acc >= 1.0) throw NonIdentifiable("gap " + std::to_string(gap) + ": perfect accuracy, noise estimate is 0");

    // Log-likelihood: w log Φ(Δ/σ) + (n-w) log Φ(-Δ/σ). Its σ-derivative has the
    // sign of -score(σ), score(σ) = acc/Φ(z) - (1-acc)/Φ(-z), which increases in σ.
    const double delta = gap;
    auto score = [&](double log_sigma) {
        const double z = delta / std::exp(log_sigma);
        return acc / normal_cdf(z) - (1.0 - acc) / normal_cdf(-z);
    };
    double lo = std::log(delta * 1e-6);  // score -> -inf
    double hi = std::log(delta * 1e9);   // score > 0 since acc > 0.5
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (score(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::exp(0.5 * (lo + hi));
}

double thurstone_mle(const PairwiseDataset& data, int gap) { return thurstone_mle(pooled_accuracy(data, gap), gap); }

bool superiority_check(double sigma_comp, double sigma_abs) {
    if (!(sigma_comp > 0.0) || !(sigma_abs > 0.0)) throw InvalidArgument("superiority_check: noises must be > 0");
    return sigma_comp < std::numbers::sqrt2 * sigma_abs;
}

NoiseReport noise_report_from_summary(const RegressionFit& fit, double within_variance,
                                      const std::map<int, GapAccuracy>& counts_by_gap) {
    NoiseReport report;
    report.fit = fit;
    report.within_variance = within_variance;
    report.sigma_abs_eff = effective_ranking_noise(fit.slope_a, fit.residual_std);

    for (const auto& [gap, counts] : counts_by_gap) {
        report.counts_by_gap[gap] = counts;
        try {
            report.sigma_comp_by_gap[gap] = thurstone_mle(counts, gap);
        } catch (const NonIdentifiable&) {
            report.non_identifiable_gaps.push_back(gap);
        }
    }
    if (report.sigma_comp_by_gap.empty()) throw NonIdentifiable("no gap has accuracy strictly between 0.5 and 1");

    // Gap 1 is the hardest comparison; fall back to the smallest identifiable gap.
    report.reference_gap = report.sigma_comp_by_gap.count(1) ? 1 : report.sigma_comp_by_gap.begin()->first;
    const double sigma_comp = report.sigma_comp_by_gap.at(report.reference_gap);
    report.noise_ratio = report.sigma_abs_eff / sigma_comp;
    // σ_abs,eff already carries the √2 of score differencing.
    report.superiority = report.sigma_abs_eff > 0.0 &&
                         superiority_check(sigma_comp, report.sigma_abs_eff / std::numbers::sqrt2);
    return report;
}

NoiseReport noise_report_from_summary(const RegressionFit& fit, double within_variance,
                                      const PairwiseDataset& pairwise) {
    pairwise.validate();
    std::map<int, GapAccuracy> counts;
    for (int gap : pairwise.gaps()) counts[gap] = pooled_accuracy(pairwise, gap);
    return noise_report_from_summary(fit, within_variance, counts);
}

NoiseReport build_noise_report(const AbsoluteRatingDataset& absolute, const PairwiseDataset& pairwise) {
    return noise_report_from_summary(fit_absolute_regression(absolute), within_sample_variance(absolute), pairwise);
}

json to_json(const NoiseReport& r) {
    json gaps = json::array();
    for (const auto& [gap, counts] : r.counts_by_gap) {
        json g = {{"gap", gap}, {"wins", counts.wins}, {"total", counts.total}, {"accuracy", counts.accuracy()}};
        if (auto it = r.sigma_comp_by_gap.find(gap); it != r.sigma_comp_by_gap.end()) {
            g["sigma_comp"] = it->second;
        } else {
            g["sigma_comp"] = nullptr;
        }
        gaps.push_back(g);
    }
    return {{"slope_a", r.fit.slope_a},
            {"intercept_b", r.fit.intercept_b},
            {"r_squared", r.fit.r_squared},
            {"within_variance", r.within_variance},
            {"residual_std", r.fit.residual_std},
            {"sigma_abs_eff", r.sigma_abs_eff},
            {"gaps", gaps},
            {"reference_gap", r.reference_gap},
            {"noise_ratio", r.noise_ratio},
            {"superiority", r.superiority}};
}

std::string format_noise_table(const NoiseReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "Absolute scoring\n"
       << "  slope a              " << r.fit.slope_a << '\n'
       << "  intercept b          " << r.fit.intercept_b << '\n'
       << "  R^2                  " << r.fit.r_squared << '\n'
       << "  within variance      " << r.within_variance << '\n'
       << "  residual std         " << r.fit.residual_std << '\n'
       << "  sigma_abs,eff        " << r.sigma_abs_eff << '\n'
       << "Pairwise comparison\n"
       << "  gap  wins/total      accuracy  sigma_comp\n";
    for (const auto& [gap, counts] : r.counts_by_gap) {
        std::ostringstream frac;
        frac << counts.wins << '/' << counts.total;
        os << "  " << std::setw(3) << gap << "  " << std::left << std::setw(14) << frac.str() << std::right << "  "
           << std::setw(8) << counts.accuracy() << "  ";
        if (auto it = r.sigma_comp_by_gap.find(gap); it != r.sigma_comp_by_gap.end()) {
            os << std::setw(10) << it->second;
        } else {
            os << std::setw(10) << "n/a";
        }
        os << '\n';
    }
    os << "Noise ratio (sigma_abs,eff / sigma_comp[gap " << r.reference_gap << "])  " << r.noise_ratio << '\n'
       << "Pairwise superior: " << (r.superiority ? "yes" : "no") << '\n';
    return os.str();
}

std::vector<EfficiencyRow> sample_efficiency_experiment(double sigma_comp, double sigma_abs, double delta_q,
                                                        std::span<const int> budgets, int repetitions,
                                                        std::uint64_t seed) {
    if (!(sigma_comp > 0.0)) throw InvalidArgument("sigma_comp must be > 0");
    if (!(sigma_abs >= 0.0)) throw InvalidArgument("sigma_abs must be >= 0");
    if (!(delta_q >= 0.0) || !std::isfinite(delta_q)) throw InvalidArgument("delta_q must be finite and >= 0");
    if (repetitions < 1000) throw InvalidArgument("sample efficiency experiment needs >= 1000 repetitions");
    if (budgets.empty()) throw InvalidArgument("no budgets given");

    std::vector<EfficiencyRow> rows;
    for (int n : budgets) {
        if (n < 1) throw InvalidArgument("budgets must be >= 1");
        double err_c = 0.0, err_a = 0.0, sum_d = 0.0, sum_d2 = 0.0;
        for (int rep = 0; rep < repetitions; ++rep) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)}));
            std::normal_distribution<double> normal(0.0, 1.0);
            std::bernoulli_distribution coin(0.5);

            int correct_votes = 0;
            double diff_sum = 0.0;  // Σ (score_better - score_worse) - nΔ
            for (int k = 0; k < n; ++k) {
                const double xi = normal(rng);
                if (delta_q + sigma_comp * xi > 0.0) ++correct_votes;
                // The score noises (ξ + η)/√2 and (η - ξ)/√2 differ by √2·ξ; η cancels.
                diff_sum += sigma_abs * std::numbers::sqrt2 * xi;
            }
            const int wrong_votes = n - correct_votes;
            const double miss_c = wrong_votes > correct_votes ? 1.0
                                  : wrong_votes < correct_votes ? 0.0
                                                                : (coin(rng) ? 1.0 : 0.0);
            const double mean_gap = delta_q + diff_sum / n;
            const double miss_a = mean_gap < 0.0 ? 1.0 : mean_gap > 0.0 ? 0.0 : (coin(rng) ? 1.0 : 0.0);
            err_c += miss_c;
            err_a += miss_a;
            const double d = miss_a - miss_c;
            sum_d += d;
            sum_d2 += d * d;
        }
        const double reps = repetitions;
        EfficiencyRow row;
        row.budget = n;
        row.misrank_comparison = err_c / reps;
        row.misrank_absolute = err_a / reps;
        row.se_comparison = std::sqrt(row.misrank_comparison * (1.0 - row.misrank_comparison) / (reps - 1.0));
        row.se_absolute = std::sqrt(row.misrank_absolute * (1.0 - row.misrank_absolute) / (reps - 1.0));
        const double mean_d = sum_d / reps;
        const double var_d = std::max(0.0, (sum_d2 - reps * mean_d * mean_d) / (reps - 1.0));
        row.se_difference = std::sqrt(var_d / reps);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace elo_arena
