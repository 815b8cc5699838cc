// Command-line front end. Exit codes: 0 ok, 1 other failure, 2 config or
// input error, 3 cache error, 4 judge error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "elo_arena/cache.hpp"
#include "elo_arena/errors.hpp"
#include "elo_arena/noise_lab.hpp"
#include "elo_arena/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace elo_arena;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kCache = 3, kJudge = 4 };

ResponseCache synthetic_cache(const RunConfig& config, int n_prompts) {
    std::vector<PromptRecord> prompts;
    for (int i = 0; i < n_prompts; ++i) prompts.push_back({"p" + std::to_string(i), std::nullopt});
    return build_cache(prompts, config.opponents, config.seed);
}

void print_summary(const RunResult& r) {
    const auto& last = r.summaries.back();
    std::printf("iterations: %llu\nfinal policy Elo: %s\nfinal skill: %.6f\nmean reward (last iteration): %.4f\n",
                static_cast<unsigned long long>(last.iteration), format_rating(last.policy_elo).c_str(),
                last.policy_skill, last.mean_reward);
}

int simulate(const std::string& config_path, const std::string& cache_path, const std::string& out_dir) {
    const auto config = load_config(config_path);
    const auto cache = load_cache(cache_path);
    const auto before = content_hash(cache);
    DirectoryRunLog logs(out_dir);
    const auto result = run(config, cache, &logs.log());
    logs.log().flush();
    if (content_hash(cache) != before) throw CorruptCache("cache changed during the run");
    print_summary(result);
    return kOk;
}

int noise(const std::string& absolute, const std::string& pairwise, const std::string& out) {
    const auto report = build_noise_report(load_absolute_dataset(absolute), load_pairwise_dataset(pairwise));
    std::ofstream file(out, std::ios::binary | std::ios::trunc);
    if (!file) throw InvalidArgument("cannot write report " + out);
    file << to_json(report).dump(2) << '\n';
    std::cout << format_noise_table(report);
    return kOk;
}

int cache_build(const std::string& prompts_path, const std::string& opponents_path, std::uint64_t seed,
                const std::string& out, const std::string& responses) {
    const auto prompts = load_prompts(prompts_path);
    const auto config = load_config(opponents_path);
    ResponseCache cache;
    if (responses.empty()) {
        cache = build_cache(prompts, config.opponents, seed);
    } else {
        std::ifstream in(responses);
        if (!in) throw InvalidArgument("cannot open responses file " + responses);
        cache = ingest_responses(prompts, config.opponent_ids(), in);
    }
    persist(cache, out);
    std::printf("wrote %zu entries (%zu prompts x %zu opponents) to %s\n", cache.size(), cache.manifest().size(),
                cache.opponents().size(), out.c_str());
    return kOk;
}

int replay_log(const std::string& log_path, const std::string& config_path) {
    const auto config = load_config(config_path);
    const auto trajectory = replay(load_match_log(log_path), config.initial_table(), config.policy.id);
    std::cout << "iteration,rating\n";
    for (std::size_t t = 0; t < trajectory.size(); ++t) std::cout << t << ',' << format_rating(trajectory[t]) << '\n';
    return kOk;
}

int sweep(const std::string& config_path, const std::vector<double>& temperatures, const std::string& cache_path,
          int n_prompts, const std::string& out_dir) {
    const auto config = load_config(config_path);
    const auto cache = cache_path.empty() ? synthetic_cache(config, n_prompts) : load_cache(cache_path);
    const auto results = temperature_sweep(config, cache, temperatures,
                                           out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir));
    std::printf("%-12s %14s %16s\n", "temperature", "final_elo", "tail_mean_elo");
    for (const auto& s : results) {
        std::printf("%-12g %14s %16s\n", s.temperature, format_rating(s.final_elo).c_str(),
                    format_rating(s.tail_mean_elo).c_str());
    }
    return kOk;
}

int efficiency(double sigma_comp, double sigma_abs, double delta_q, const std::vector<int>& budgets, int reps,
               std::uint64_t seed) {
    std::printf("superiority condition %s\n", superiority_check(sigma_comp, sigma_abs) ? "holds" : "fails");
    std::printf("budget,misrank_comparison,misrank_absolute,se_difference\n");
    for (const auto& r : sample_efficiency_experiment(sigma_comp, sigma_abs, delta_q, budgets, reps, seed)) {
        std::printf("%d,%.6f,%.6f,%.6f\n", r.budget, r.misrank_comparison, r.misrank_absolute, r.se_difference);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Elo-driven self-play training simulator and judge-noise toolkit"};
    app.require_subcommand(1);

    std::string config, cache, out, absolute, pairwise, prompts, opponents, responses, log;
    std::uint64_t seed = 0;
    std::vector<double> temperatures{20, 200, 2000};
    int n_prompts = 64;

    auto* sim = app.add_subcommand("simulate", "run the training loop and write logs");
    sim->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--cache", cache, "response cache")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out, "log directory")->required();

    auto* nz = app.add_subcommand("noise", "estimate judge noise from rating data");
    nz->add_option("--absolute", absolute, "absolute ratings (NDJSON)")->required()->check(CLI::ExistingFile);
    nz->add_option("--pairwise", pairwise, "pairwise outcomes (NDJSON)")->required()->check(CLI::ExistingFile);
    nz->add_option("--out", out, "report path (JSON)")->required();

    auto* cb = app.add_subcommand("cache-build", "build a response cache");
    cb->add_option("--prompts", prompts, "prompt records (NDJSON)")->required()->check(CLI::ExistingFile);
    cb->add_option("--opponents", opponents, "config holding the opponent pool")->required()->check(CLI::ExistingFile);
    cb->add_option("--seed", seed, "generation seed");
    cb->add_option("--out", out, "cache path")->required();
    cb->add_option("--responses", responses, "pre-generated responses (NDJSON) instead of simulation")
        ->check(CLI::ExistingFile);

    auto* rp = app.add_subcommand("replay", "recompute the policy Elo trajectory from a match log");
    rp->add_option("--log", log, "matches.jsonl")->required()->check(CLI::ExistingFile);
    rp->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);

    auto* sw = app.add_subcommand("sweep", "one run per temperature");
    sw->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
    sw->add_option("--temperatures", temperatures, "comma-separated temperatures")->delimiter(',');
    sw->add_option("--cache", cache, "response cache (default: simulated from the config seed)")
        ->check(CLI::ExistingFile);
    sw->add_option("--prompts", n_prompts, "prompt count for a simulated cache")->check(CLI::PositiveNumber);
    sw->add_option("--out", out, "output directory");

    double sigma_comp = 1.0, sigma_abs = 1.0, delta_q = 1.0;
    std::vector<int> budgets{1, 5, 15};
    int reps = 10000;
    auto* ef = app.add_subcommand("efficiency", "compare misranking rates of the two judging protocols");
    ef->add_option("--sigma-comp", sigma_comp);
    ef->add_option("--sigma-abs", sigma_abs);
    ef->add_option("--delta-q", delta_q);
    ef->add_option("--budgets", budgets)->delimiter(',');
    ef->add_option("--reps", reps);
    ef->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*sim) return simulate(config, cache, out);
        if (*nz) return noise(absolute, pairwise, out);
        if (*cb) return cache_build(prompts, opponents, seed, out, responses);
        if (*rp) return replay_log(log, config);
        if (*sw) return sweep(config, temperatures, cache, n_prompts, out);
        if (*ef) return efficiency(sigma_comp, sigma_abs, delta_q, budgets, reps, seed);
    } catch (const JudgeUnavailable& e) {
        std::cerr << "judge error: " << e.what() << " (prompt " << e.prompt_id << ")\n";
        return kJudge;
    } catch (const ProtocolError& e) {
        std::cerr << "judge error: " << e.what() << '\n';
        return kJudge;
    } catch (const CacheMiss& e) {
        std::cerr << "cache error: " << e.what() << '\n';
        return kCache;
    } catch (const CorruptCache& e) {
        std::cerr << "cache error: " << e.what() << '\n';
        return kCache;
    } catch (const IncompatibleFormat& e) {
        std::cerr << "cache error: " << e.what() << '\n';
        return kCache;
    } catch (const DuplicateEntry& e) {
        std::cerr << "cache error: " << e.what() << '\n';
        return kCache;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kConfig;
    } catch (const MissingAgent& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
