#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "elo_arena/matchmaking.hpp"

using namespace elo_arena;

namespace {

RatingTable table_with(double policy, std::vector<double> opponents, std::vector<AgentId>& ids) {
    RatingTable t;
    t.add("policy", policy);
    ids.clear();
    for (std::size_t k = 0; k < opponents.size(); ++k) {
        ids.push_back("M" + std::to_string(k + 1));
        t.add(ids.back(), opponents[k]);
    }
    return t;
}

double total(const SelectionDistribution& d) {
    double s = 0.0;
    for (const auto& p : d) s += p.probability;
    return s;
}

}  // namespace

TEST_CASE("distance softmax at T = 200") {
    std::vector<AgentId> ids;
    const auto t = table_with(1500.0, {1400.0, 1700.0, 2000.0}, ids);
    const auto d = selection_distribution(t, "policy", ids, 200.0);
    REQUIRE(d.size() == 3);
    // exp(-d/T) normalized for d = 100, 200, 500.
    CHECK(d[0].probability == doctest::Approx(0.5740969929676946).epsilon(1e-12));
    CHECK(d[1].probability == doctest::Approx(0.3482074278837349).epsilon(1e-12));
    CHECK(d[2].probability == doctest::Approx(0.0776955791485706).epsilon(1e-12));
    CHECK(d[0].id == "M1");
    CHECK(d[2].id == "M3");
    CHECK(std::abs(total(d) - 1.0) < 1e-12);
}

TEST_CASE("limits of the temperature") {
    std::vector<AgentId> ids;
    SUBCASE("equidistant opponents split evenly") {
        const auto t = table_with(1500.0, {1300.0, 1700.0}, ids);
        for (double T : {1.0, 20.0, 2000.0}) {
            const auto d = selection_distribution(t, "policy", ids, T);
            CHECK(d[0].probability == doctest::Approx(0.5).epsilon(1e-14));
        }
    }
    SUBCASE("huge T is uniform") {
        const auto t = table_with(1350.0, {1400.0, 1700.0, 2000.0}, ids);
        for (const auto& p : selection_distribution(t, "policy", ids, 1e9)) {
            CHECK(std::abs(p.probability - 1.0 / 3.0) < 1e-3);
        }
    }
    SUBCASE("tiny T concentrates on the nearest without underflow") {
        const auto t = table_with(1350.0, {1400.0, 1700.0, 2000.0}, ids);
        const double gap = 350.0 - 50.0;  // second-nearest minus nearest distance
        const auto d = selection_distribution(t, "policy", ids, gap / 50.0);
        CHECK(d[0].probability >= 1.0 - 1e-6);
        CHECK(std::abs(total(d) - 1.0) < 1e-12);
        const auto d0 = selection_distribution(t, "policy", ids, 1e-3);
        CHECK(d0[0].probability == 1.0);
    }
}

TEST_CASE("only rating differences matter") {
    std::vector<AgentId> ids;
    const auto ta = table_with(1500.0, {1400.0, 1650.0, 2100.0}, ids);
    const auto a = selection_distribution(ta, "policy", ids, 150.0);
    const auto tb = table_with(2500.0, {2400.0, 2650.0, 3100.0}, ids);
    const auto b = selection_distribution(tb, "policy", ids, 150.0);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].probability == doctest::Approx(b[k].probability).epsilon(1e-12));
}

TEST_CASE("moving toward an opponent raises its probability") {
    std::vector<AgentId> ids;
    // Strict once the policy sits above some opponent: the step toward M3 moves away from it.
    double previous = 0.0;
    for (double r = 1425.0; r <= 2000.0; r += 25.0) {
        const auto t = table_with(r, {1400.0, 1700.0, 2000.0}, ids);
        const auto d = selection_distribution(t, "policy", ids, 200.0);
        CHECK(d[2].probability > previous);
        previous = d[2].probability;
    }
    // Below every opponent all distances shrink together and nothing changes.
    const auto low = table_with(1200.0, {1400.0, 1700.0, 2000.0}, ids);
    const auto lower = table_with(1300.0, {1400.0, 1700.0, 2000.0}, ids);
    const auto a = selection_distribution(low, "policy", ids, 200.0);
    const auto b = selection_distribution(lower, "policy", ids, 200.0);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].probability == doctest::Approx(b[k].probability).epsilon(1e-12));
}

TEST_CASE("selection errors") {
    std::vector<AgentId> ids;
    const auto t = table_with(1500.0, {1400.0}, ids);
    CHECK_THROWS_AS(selection_distribution(t, "policy", {}, 200.0), InvalidArgument);
    CHECK_THROWS_AS(selection_distribution(t, "policy", ids, 0.0), InvalidArgument);
    CHECK_THROWS_AS(selection_distribution(t, "policy", ids, -5.0), InvalidArgument);
    const std::vector<AgentId> missing{"M1", "ghost"};
    CHECK_THROWS_AS(selection_distribution(t, "policy", missing, 200.0), MissingAgent);
    CHECK_THROWS_AS(selection_distribution(t, "nobody", ids, 200.0), MissingAgent);
    CHECK_THROWS_AS(OpponentSampler({0.0, 1}), InvalidArgument);
}

TEST_CASE("sampling") {
    SUBCASE("degenerate distribution") {
        const SelectionDistribution d{{"A", 1.0}};
        Rng rng(3);
        for (int i = 0; i < 100; ++i) CHECK(sample_opponent(d, rng) == "A");
    }
    SUBCASE("zero-probability entries are never drawn") {
        const SelectionDistribution d{{"A", 0.0}, {"B", 1.0}, {"C", 0.0}};
        Rng rng(4);
        for (int i = 0; i < 1000; ++i) CHECK(sample_opponent(d, rng) == "B");
    }
    SUBCASE("fixed seed reproduces the sequence") {
        const SelectionDistribution d{{"A", 0.2}, {"B", 0.5}, {"C", 0.3}};
        OpponentSampler s1({200.0, 99}), s2({200.0, 99});
        for (int i = 0; i < 500; ++i) CHECK(s1.sample(d) == s2.sample(d));
    }
    SUBCASE("empirical frequencies match the distribution") {
        const SelectionDistribution d{{"M1", 0.5740969929676946}, {"M2", 0.3482074278837349}, {"M3", 0.0776955791485706}};
        Rng rng(11);
        std::map<AgentId, int> counts;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) ++counts[sample_opponent(d, rng)];
        for (const auto& p : d) CHECK(std::abs(counts[p.id] / double(draws) - p.probability) < 0.01);
    }
    SUBCASE("malformed distributions") {
        Rng rng(1);
        CHECK_THROWS_AS(sample_opponent({}, rng), InvalidArgument);
        CHECK_THROWS_AS(sample_opponent({{"A", 0.3}, {"B", 0.3}}, rng), InvalidArgument);
        CHECK_THROWS_AS(sample_opponent({{"A", -0.5}, {"B", 1.5}}, rng), InvalidArgument);
    }
}
