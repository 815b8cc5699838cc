#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "elo_arena/judging.hpp"
#include "elo_arena/normal.hpp"

using namespace elo_arena;

namespace {

JudgeModel thurstone(double sigma, std::uint64_t seed = 1) {
    JudgeModel j;
    j.kind = JudgeKind::thurstone_comparison;
    j.sigma_comp = sigma;
    j.rng_seed = seed;
    return j;
}

JudgeModel absolute(double sigma, std::uint64_t seed = 1) {
    JudgeModel j;
    j.kind = JudgeKind::noisy_absolute;
    j.sigma_abs = sigma;
    j.rng_seed = seed;
    return j;
}

double thurstone_win_rate(double dq, double sigma, int trials, std::uint64_t seed) {
    Rng rng(seed);
    const auto judge = thurstone(sigma);
    const ResponseSample p{dq, 100, {}}, o{0.0, 100, {}};
    int wins = 0;
    for (int i = 0; i < trials; ++i) wins += compare_thurstone(p, o, judge, rng).winner == Winner::policy;
    return wins / double(trials);
}

double score_win_rate(double dq, double sigma, int trials, std::uint64_t seed) {
    Rng rng(seed);
    const auto judge = absolute(sigma);
    const ResponseSample p{dq, 100, {}}, o{0.0, 100, {}};
    int wins = 0;
    for (int i = 0; i < trials; ++i) wins += compare_via_scores(p, o, judge, rng).reward == 1.0;
    return wins / double(trials);
}

// Fraction of repetitions in which a majority of n judgments prefers the worse item.
template <typename Compare>
double majority_misrank(Compare compare, double dq, int n, int reps, Rng& rng) {
    const ResponseSample better{dq, 100, {}}, worse{0.0, 100, {}};
    int misranked = 0;
    for (int r = 0; r < reps; ++r) {
        int wins = 0;
        for (int k = 0; k < n; ++k) wins += compare(better, worse, rng).winner == Winner::policy;
        misranked += 2 * wins < n;
    }
    return misranked / double(reps);
}

}  // namespace

TEST_CASE("word counting") {
    CHECK(count_words("") == 0);
    CHECK(count_words("   \n\t ") == 0);
    CHECK(count_words("one") == 1);
    CHECK(count_words("  two\twords\n") == 2);
    CHECK(count_words("a  b   c") == 3);
}

TEST_CASE("thurstone judge win probability") {
    CHECK(std::abs(thurstone_win_rate(0.0, 1.0, 100000, 5) - 0.5) < 0.005);
    CHECK(std::abs(thurstone_win_rate(1.0, 1.0, 100000, 6) - 0.8413447460685429) < 0.005);
    // Gap-1 comparisons at σ_comp = 7.85 are right 55.1% of the time.
    CHECK(normal_cdf(1.0 / 7.85) == doctest::Approx(0.551).epsilon(1e-3));
    CHECK(std::abs(thurstone_win_rate(1.0, 7.85, 100000, 7) - 0.551) < 0.005);
}

TEST_CASE("thurstone judge is antisymmetric and monotone") {
    const double sigma = 1.5;
    CHECK(std::abs(thurstone_win_rate(0.7, sigma, 100000, 21) + thurstone_win_rate(-0.7, sigma, 100000, 22) - 1.0) < 0.01);
    double previous = -1.0;
    for (double m : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        const double rate = thurstone_win_rate(m * sigma, sigma, 100000, 30 + static_cast<std::uint64_t>(m + 2));
        CHECK(rate >= previous);
        previous = rate;
    }
}

TEST_CASE("score-differencing judge") {
    SUBCASE("noiseless judge always prefers the better response") {
        Rng rng(1);
        const auto judge = absolute(0.0);
        for (int i = 0; i < 100; ++i) {
            CHECK(compare_via_scores({1.0, 10, {}}, {0.5, 10, {}}, judge, rng).winner == Winner::policy);
        }
        const auto tie = compare_via_scores({1.0, 10, {}}, {1.0, 10, {}}, judge, rng);
        CHECK(tie.winner == Winner::tie);
        CHECK(tie.reward == 0.0);
    }
    SUBCASE("difference of two scores has std √2·σ") {
        CHECK(std::abs(score_win_rate(2.0, 2.0, 100000, 8) - normal_cdf(1.0 / std::numbers::sqrt2)) < 0.005);
        CHECK(std::abs(score_win_rate(0.0, 1.0, 100000, 9) - 0.5) < 0.005);
    }
}

TEST_CASE("judges reject the wrong kind") {
    Rng rng(1);
    CHECK_THROWS_AS(compare_thurstone({}, {}, absolute(1.0), rng), InvalidJudge);
    CHECK_THROWS_AS(compare_via_scores({}, {}, thurstone(1.0), rng), InvalidJudge);
    CHECK_THROWS_AS(compare_thurstone({}, {}, thurstone(0.0), rng), InvalidJudge);
    CHECK_THROWS_AS(compare_via_scores({}, {}, absolute(-1.0), rng), InvalidJudge);
    JudgeModel remote;
    remote.kind = JudgeKind::remote;
    CHECK_THROWS_AS(remote.validate(), InvalidJudge);
    CHECK_THROWS_AS(judge_kind_from_string("bogus"), InvalidJudge);
}

TEST_CASE("length guard") {
    const auto win = Verdict::from_winner(Winner::policy);
    CHECK(apply_length_guard(win, 500, 150, 300) == Verdict{Winner::opponent, 0.0});
    CHECK(apply_length_guard(win, 450, 150, 300) == win);
    CHECK(apply_length_guard(win, 100, 400, 300) == win);
    CHECK(apply_length_guard(win, 451, 150) == Verdict{Winner::opponent, 0.0});
    const auto tie = Verdict::from_winner(Winner::tie);
    CHECK(apply_length_guard(tie, 10, 10, 0) == tie);
}

TEST_CASE("judge_pair") {
    JudgeCall call{3, "p7", "", "M1", 0, 0};
    SUBCASE("rewards are binary with mean 1/2 for identical samples") {
        const auto judge = thurstone(1.0, 77);
        double sum = 0.0;
        const int calls = 100000;
        for (int i = 0; i < calls; ++i) {
            call.output_index = static_cast<std::uint64_t>(i);
            const auto r = judge_pair(call, {0.3, 100, {}}, {0.3, 100, {}}, judge);
            CHECK((r.reward == 0.0 || r.reward == 1.0));
            sum += r.reward;
        }
        CHECK(std::abs(sum / calls - 0.5) < 0.005);
    }
    SUBCASE("policy 301 words longer always loses") {
        for (auto judge : {thurstone(1.0), absolute(0.0)}) {
            for (std::uint64_t i = 0; i < 200; ++i) {
                call.output_index = i;
                const auto r = judge_pair(call, {50.0, 401, {}}, {0.0, 100, {}}, judge);
                CHECK(r.reward == 0.0);
                CHECK(r.winner == Winner::opponent);
            }
        }
    }
    SUBCASE("noiseless absolute judge with equal lengths") {
        const auto r = judge_pair(call, {1.0, 120, {}}, {0.0, 120, {}}, absolute(0.0));
        CHECK(r.reward == 1.0);
        CHECK(r.prompt_id == "p7");
        CHECK(r.opponent_id == "M1");
        CHECK(r.iteration == 3);
        CHECK(r.policy_words == 120);
    }
    SUBCASE("verdicts depend on the call, not on evaluation order") {
        const auto judge = thurstone(1.0, 5);
        std::vector<MatchRecord> forward, backward;
        for (std::uint64_t i = 0; i < 64; ++i) {
            call.output_index = i;
            forward.push_back(judge_pair(call, {0.0, 1, {}}, {0.0, 1, {}}, judge));
        }
        for (std::uint64_t i = 64; i-- > 0;) {
            call.output_index = i;
            backward.insert(backward.begin(), judge_pair(call, {0.0, 1, {}}, {0.0, 1, {}}, judge));
        }
        CHECK(forward == backward);
    }
    SUBCASE("negative threshold") {
        CHECK_THROWS_AS(judge_pair(call, {}, {}, thurstone(1.0), -1), InvalidArgument);
    }
}

TEST_CASE("comparison beats score differencing exactly when σ_comp < √2·σ_abs") {
    const double sigma_abs = 1.0, dq = 1.0;
    const int n = 15, reps = 10000;
    Rng rng(4242);
    const auto by_scores = [&](const ResponseSample& a, const ResponseSample& b, Rng& g) {
        return compare_via_scores(a, b, absolute(sigma_abs), g);
    };
    const double abs_rate = majority_misrank(by_scores, dq, n, reps, rng);

    for (double factor : {0.5, 2.0}) {
        const double sigma_comp = factor * std::numbers::sqrt2 * sigma_abs;
        const auto by_comparison = [&](const ResponseSample& a, const ResponseSample& b, Rng& g) {
            return compare_thurstone(a, b, thurstone(sigma_comp), g);
        };
        const double comp_rate = majority_misrank(by_comparison, dq, n, reps, rng);
        const double se = std::sqrt(comp_rate * (1 - comp_rate) / reps + abs_rate * (1 - abs_rate) / reps);
        INFO("factor " << factor << ": comparison " << comp_rate << ", absolute " << abs_rate << ", se " << se);
        if (factor < 1.0) {
            CHECK(abs_rate - comp_rate >= 3.0 * se);
        } else {
            CHECK(comp_rate - abs_rate >= 3.0 * se);
        }
    }
}
