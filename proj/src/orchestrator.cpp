#include "elo_arena/orchestrator.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "elo_arena/errors.hpp"
#include "elo_arena/random.hpp"

namespace elo_arena {

using nlohmann::json;

namespace {

// Stream tags keep the generators of a run independent of one another.
constexpr std::uint64_t kPromptStream = 0x70726f6d7074ULL;
constexpr std::uint64_t kSelectStream = 0x73656c656374ULL;
constexpr std::uint64_t kPolicyStream = 0x706f6c696379ULL;
constexpr std::uint64_t kJudgeStream = 0x6a75646765ULL;

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

LengthDistribution lengths_from_json(const json& j, LengthDistribution fallback) {
    if (auto it = j.find("words"); it != j.end()) {
        if (it->is_number_integer()) return {it->get<int>(), it->get<int>()};
        return {it->at("min").get<int>(), it->at("max").get<int>()};
    }
    return fallback;
}

json lengths_to_json(const LengthDistribution& l) { return {{"min", l.min_words}, {"max", l.max_words}}; }

}  // namespace

std::string format_rating(double rating) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", rating);
    return buf;
}

std::vector<OpponentSpec> default_opponents() {
    return {{"M1", 0.0, 0.5, 1400.0, {}}, {"M2", 1.0, 0.5, 1700.0, {}}, {"M3", 2.0, 0.5, 2000.0, {}}};
}

void RunConfig::validate() const {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (group_size < 2) throw ConfigError("group_size must be >= 2");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be > 0");
    if (!(k_factor > 0.0) || !std::isfinite(k_factor)) throw ConfigError("k_factor must be > 0");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("clip_epsilon must lie in (0, 1)");
    if (!(kl_beta >= 0.0)) throw ConfigError("kl_beta must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (length_guard < 0) throw ConfigError("length_guard must be >= 0");
    if (!(policy.spread > 0.0)) throw ConfigError("policy spread must be > 0");
    if (!std::isfinite(policy.init_skill) || !std::isfinite(policy.init_elo)) {
        throw ConfigError("policy init_skill and init_elo must be finite");
    }
    if (opponents.empty()) throw ConfigError("at least one opponent is required");
    std::map<AgentId, int> seen{{policy.id, 1}};
    for (const auto& o : opponents) {
        if (++seen[o.id] > 1) throw ConfigError("duplicate agent id '" + o.id + "'");
        if (!(o.spread >= 0.0) || !std::isfinite(o.skill) || !std::isfinite(o.init_elo)) {
            throw ConfigError("opponent '" + o.id + "' has an invalid skill, spread or init_elo");
        }
    }
    try {
        policy.lengths.validate();
        for (const auto& o : opponents) o.lengths.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    switch (judge.kind) {
        case JudgeKind::thurstone_comparison:
            if (!(judge.sigma_comp > 0.0)) throw ConfigError("judge sigma_comp must be > 0");
            break;
        case JudgeKind::noisy_absolute:
            if (!(judge.sigma_abs >= 0.0)) throw ConfigError("judge sigma_abs must be >= 0");
            break;
        case JudgeKind::remote:
            judge.gateway.validate();
            break;
    }
}

std::vector<AgentId> RunConfig::opponent_ids() const {
    std::vector<AgentId> ids;
    for (const auto& o : opponents) ids.push_back(o.id);
    return ids;
}

RatingTable RunConfig::initial_table() const {
    RatingTable t(k_factor);
    t.add(policy.id, policy.init_elo);
    for (const auto& o : opponents) t.add(o.id, o.init_elo);
    return t;
}

SurrogatePolicy RunConfig::initial_policy() const {
    auto p = SurrogatePolicy::at(policy.init_skill, policy.spread);
    p.clip_epsilon = clip_epsilon;
    p.kl_beta = kl_beta;
    p.learning_rate = learning_rate;
    return p;
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.iterations = j.value("iterations", c.iterations);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.group_size = j.value("group_size", c.group_size);
        c.temperature = j.value("temperature", c.temperature);
        c.k_factor = j.value("k_factor", c.k_factor);
        c.clip_epsilon = j.value("clip_epsilon", c.clip_epsilon);
        c.kl_beta = j.value("kl_beta", c.kl_beta);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.length_guard = j.value("length_guard", c.length_guard);

        if (auto it = j.find("policy"); it != j.end()) {
            const auto& p = *it;
            c.policy.id = p.value("id", c.policy.id);
            c.policy.init_skill = p.value("init_skill", c.policy.init_skill);
            c.policy.spread = p.value("spread", c.policy.spread);
            c.policy.init_elo = p.value("init_elo", c.policy.init_elo);
            c.policy.lengths = lengths_from_json(p, c.policy.lengths);
        }
        if (auto it = j.find("opponents"); it != j.end()) {
            for (const auto& o : *it) {
                OpponentSpec spec;
                spec.id = o.at("id").get<std::string>();
                spec.skill = o.value("skill", spec.skill);
                spec.spread = o.value("spread", spec.spread);
                spec.init_elo = o.value("init_elo", spec.init_elo);
                spec.lengths = lengths_from_json(o, spec.lengths);
                c.opponents.push_back(std::move(spec));
            }
        } else {
            c.opponents = default_opponents();
        }
        if (auto it = j.find("judge"); it != j.end()) {
            const auto& jj = *it;
            c.judge.kind = judge_kind_from_string(jj.value("kind", std::string(to_string(c.judge.kind))));
            c.judge.sigma_comp = jj.value("sigma_comp", c.judge.sigma_comp);
            c.judge.sigma_abs = jj.value("sigma_abs", c.judge.sigma_abs);
            if (jj.contains("seed")) c.judge.seed = jj.at("seed").get<std::uint64_t>();
            if (jj.contains("gateway")) c.judge.gateway = gateway_config_from_json(jj.at("gateway"));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const InvalidJudge& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

json to_json(const RunConfig& c) {
    json opponents = json::array();
    for (const auto& o : c.opponents) {
        opponents.push_back({{"id", o.id},
                             {"skill", o.skill},
                             {"spread", o.spread},
                             {"init_elo", o.init_elo},
                             {"words", lengths_to_json(o.lengths)}});
    }
    json judge = {{"kind", to_string(c.judge.kind)}, {"sigma_comp", c.judge.sigma_comp}, {"sigma_abs", c.judge.sigma_abs}};
    if (c.judge.seed) judge["seed"] = *c.judge.seed;
    if (c.judge.kind == JudgeKind::remote) {
        const auto& g = c.judge.gateway;
        judge["gateway"] = {{"base_url", g.base_url},
                            {"timeout_ms", g.timeout.count()},
                            {"max_retries", g.max_retries},
                            {"max_in_flight", g.max_in_flight},
                            {"prompt_template_compare", g.prompt_template_compare},
                            {"prompt_template_score", g.prompt_template_score},
                            {"backoff_base_ms", g.backoff_base.count()},
                            {"backoff_factor", g.backoff_factor}};
    }
    return {{"seed", c.seed},
            {"iterations", c.iterations},
            {"batch_size", c.batch_size},
            {"group_size", c.group_size},
            {"temperature", c.temperature},
            {"k_factor", c.k_factor},
            {"clip_epsilon", c.clip_epsilon},
            {"kl_beta", c.kl_beta},
            {"learning_rate", c.learning_rate},
            {"length_guard", c.length_guard},
            {"policy",
             {{"id", c.policy.id},
              {"init_skill", c.policy.init_skill},
              {"spread", c.policy.spread},
              {"init_elo", c.policy.init_elo},
              {"words", lengths_to_json(c.policy.lengths)}}},
            {"opponents", opponents},
            {"judge", judge}};
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Logs

RunLog::RunLog(std::ostream& ratings, std::ostream& selection, std::ostream& training, std::ostream& matches)
    : ratings_(ratings), selection_(selection), training_(training), matches_(matches) {}

void RunLog::write_headers() {
    ratings_ << "iteration,agent_id,rating\n";
    selection_ << "iteration,opponent_id,selection_count,probability\n";
    training_ << "iteration,skill,objective,mean_reward,kl_term\n";
}

void RunLog::ratings_row(std::uint64_t iteration, const RatingTable& table) {
    for (const auto& [id, r] : table.entries()) ratings_ << iteration << ',' << id << ',' << format_rating(r) << '\n';
}

void RunLog::selection_rows(std::uint64_t iteration, std::span<const AgentId> ids, const IterationSummary& s) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
        selection_ << iteration << ',' << ids[k] << ',' << s.selection_counts[k] << ','
                   << format_real(s.selection_probabilities[k]) << '\n';
    }
}

void RunLog::training_row(const IterationSummary& s) {
    training_ << s.iteration << ',' << format_real(s.policy_skill) << ',' << format_real(s.objective) << ','
              << format_real(s.mean_reward) << ',' << format_real(s.kl_term) << '\n';
}

void RunLog::match(const MatchRecord& r) {
    const json j = {{"iteration", r.iteration},       {"prompt_id", r.prompt_id},
                    {"opponent_id", r.opponent_id},   {"output_index", r.output_index},
                    {"winner", to_string(r.winner)},  {"reward", static_cast<int>(r.reward)},
                    {"policy_words", r.policy_words}, {"opponent_words", r.opponent_words}};
    matches_ << j.dump() << '\n';
}

void RunLog::flush() {
    ratings_.flush();
    selection_.flush();
    training_.flush();
    matches_.flush();
}

DirectoryRunLog::DirectoryRunLog(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](std::ofstream& f, const char* name) {
        f.open(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw InvalidArgument("cannot write " + (dir / name).string());
    };
    open(ratings_, "ratings.csv");
    open(selection_, "selection.csv");
    open(training_, "training.csv");
    open(matches_, "matches.jsonl");
    log_ = std::make_unique<RunLog>(ratings_, selection_, training_, matches_);
    log_->write_headers();
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

struct PromptDraw {
    std::string prompt_id;
    std::size_t opponent;  // index into config.opponents
};

}  // namespace

RunResult run(const RunConfig& config, const ResponseCache& cache, RunLog* log) {
    config.validate();
    const auto opponent_ids = config.opponent_ids();
    if (cache.manifest().empty()) throw CacheMiss("<manifest>", "<any>");
    cache.check_complete(opponent_ids);

    std::map<AgentId, std::size_t> opponent_index;
    for (std::size_t k = 0; k < opponent_ids.size(); ++k) opponent_index[opponent_ids[k]] = k;

    JudgeModel judge;
    judge.kind = config.judge.kind;
    judge.sigma_comp = config.judge.sigma_comp;
    judge.sigma_abs = config.judge.sigma_abs;
    judge.rng_seed = config.judge.seed.value_or(derive_seed(config.seed, {kJudgeStream}));
    if (judge.kind == JudgeKind::remote) judge.gateway = std::make_shared<JudgeGateway>(config.judge.gateway);

    RunResult result;
    result.final_table = config.initial_table();
    result.final_policy = config.initial_policy();
    result.policy_elo_trajectory.push_back(result.final_table.rating(config.policy.id));
    if (log) log->ratings_row(0, result.final_table);

    Rng prompt_rng(derive_seed(config.seed, {kPromptStream}));
    OpponentSampler sampler({config.temperature, derive_seed(config.seed, {kSelectStream})});
    std::uniform_int_distribution<std::size_t> pick_prompt(0, cache.manifest().size() - 1);
    const auto B = static_cast<std::size_t>(config.batch_size);
    const auto G = static_cast<std::size_t>(config.group_size);

    for (int t = 1; t <= config.iterations; ++t) {
        const auto iteration = static_cast<std::uint64_t>(t);
        const RatingTable& snapshot = result.final_table;
        const SurrogatePolicy& policy = result.final_policy;

        IterationSummary summary;
        summary.iteration = iteration;
        const auto dist = selection_distribution(snapshot, config.policy.id, opponent_ids, config.temperature);
        summary.selection_counts.assign(opponent_ids.size(), 0);
        for (std::size_t k = 0; k < dist.size(); ++k) {
            summary.selection_probabilities.push_back(dist[k].probability);
            summary.weighted_opponent_rating += dist[k].probability * snapshot.rating(dist[k].id);
        }

        // Prompts and opponents first, so the draw sequence is independent of judging.
        std::vector<PromptDraw> draws(B);
        for (auto& d : draws) {
            d.prompt_id = cache.manifest()[pick_prompt(prompt_rng)];
            d.opponent = opponent_index.at(sampler.sample(dist));
            ++summary.selection_counts[d.opponent];
        }

        std::vector<std::vector<ResponseSample>> outputs(B);
        std::vector<JudgeCall> calls;
        calls.reserve(B * G);
        for (std::size_t b = 0; b < B; ++b) {
            outputs[b] = sample_outputs(policy, config.group_size,
                                        derive_seed(config.seed, {kPolicyStream, iteration, b}),
                                        config.policy.lengths);
            const auto text = cache.prompt_texts().find(draws[b].prompt_id);
            for (std::size_t j = 0; j < G; ++j) {
                calls.push_back({iteration, draws[b].prompt_id,
                                 text == cache.prompt_texts().end() ? std::string{} : text->second,
                                 opponent_ids[draws[b].opponent], b, j});
            }
        }

        std::vector<MatchRecord> records;
        records.reserve(B * G);
        auto opponent_sample = [&](std::size_t b) -> const ResponseSample& {
            return lookup(cache, draws[b].prompt_id, opponent_ids[draws[b].opponent]);
        };

        if (judge.kind == JudgeKind::remote) {
            std::vector<CompareRequest> requests;
            requests.reserve(calls.size());
            for (const auto& c : calls) {
                requests.push_back({c.prompt_text.empty() ? c.prompt_id : c.prompt_text,
                                    render_sample(outputs[c.slot][c.output_index]), render_sample(opponent_sample(c.slot)),
                                    std::to_string(iteration) + "-" + std::to_string(c.slot) + "-" +
                                        std::to_string(c.output_index)});
            }
            // Keep the verdicts that arrived before reporting a failure.
            const auto settled = judge.gateway->settle_batch(requests);
            std::vector<std::optional<RemoteWinner>> verdicts(settled.size());
            std::optional<JudgeUnavailable> failure;
            std::exception_ptr other;
            for (std::size_t k = 0; k < settled.size(); ++k) {
                verdicts[k] = settled[k].winner;
                if (!settled[k].error) continue;
                try {
                    std::rethrow_exception(settled[k].error);
                } catch (const JudgeUnavailable& e) {
                    if (!failure) failure.emplace(e.what(), calls[k].prompt_id);
                } catch (...) {
                    if (!other) other = settled[k].error;
                }
            }
            for (std::size_t i = 0; i < calls.size(); ++i) {
                if (!verdicts[i]) continue;
                const auto& c = calls[i];
                records.push_back(make_record(c, Verdict::from_winner(from_remote(*verdicts[i])),
                                              outputs[c.slot][c.output_index], opponent_sample(c.slot),
                                              config.length_guard));
            }
            if (failure || other) {
                if (log) {
                    for (const auto& r : records) log->match(r);
                    log->flush();
                }
                if (other) std::rethrow_exception(other);
                throw *failure;
            }
        } else {
            for (const auto& c : calls) {
                records.push_back(judge_pair(c, outputs[c.slot][c.output_index], opponent_sample(c.slot), judge,
                                             config.length_guard));
            }
        }

        // Advantages per prompt group, then one step over the whole batch.
        std::vector<PolicyGroup> groups(B);
        std::vector<MatchOutcome> outcomes;
        outcomes.reserve(records.size());
        double reward_sum = 0.0;
        double abs_adv_sum = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            std::vector<double> rewards(G);
            for (std::size_t j = 0; j < G; ++j) rewards[j] = records[b * G + j].reward;
            const auto adv = normalize_advantages(rewards);
            groups[b] = {outputs[b], adv.advantages};
            abs_adv_sum += adv.advantages.cwiseAbs().sum();
        }
        for (const auto& r : records) {
            reward_sum += r.reward;
            outcomes.push_back(snapshot.outcome(config.policy.id, r.opponent_id, r.reward));
        }

        const auto terms = grpo_objective_terms(policy, groups);
        SurrogatePolicy next_policy = grpo_step(policy, groups);
        RatingTable next_table = update_batch(snapshot, config.policy.id, outcomes);

        summary.mean_reward = reward_sum / static_cast<double>(records.size());
        summary.mean_abs_advantage = abs_adv_sum / static_cast<double>(records.size());
        summary.objective = terms.objective;
        summary.kl_term = config.kl_beta * terms.kl;
        summary.policy_skill = next_policy.skill;
        summary.policy_elo = next_table.rating(config.policy.id);

        result.final_policy = next_policy;
        result.final_table = std::move(next_table);
        result.policy_elo_trajectory.push_back(summary.policy_elo);

        if (log) {
            for (const auto& r : records) log->match(r);
            log->ratings_row(iteration, result.final_table);
            log->selection_rows(iteration, opponent_ids, summary);
            log->training_row(summary);
        }
        result.matches.insert(result.matches.end(), records.begin(), records.end());
        result.summaries.push_back(std::move(summary));
    }
    if (log) log->flush();
    return result;
}

// ---------------------------------------------------------------------------
// Replay and sweeps

std::vector<MatchRecord> read_match_log(std::istream& in) {
    std::vector<MatchRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            MatchRecord r;
            r.iteration = j.at("iteration").get<std::uint64_t>();
            r.prompt_id = j.at("prompt_id").get<std::string>();
            r.opponent_id = j.at("opponent_id").get<std::string>();
            r.output_index = j.at("output_index").get<std::uint64_t>();
            r.winner = winner_from_string(j.at("winner").get<std::string>());
            r.reward = j.at("reward").get<double>();
            r.policy_words = j.at("policy_words").get<int>();
            r.opponent_words = j.at("opponent_words").get<int>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw InvalidArgument("match log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<MatchRecord> load_match_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open match log " + path);
    return read_match_log(in);
}

std::vector<double> replay(std::span<const MatchRecord> matches, const RatingTable& initial, const AgentId& policy_id) {
    RatingTable table = initial;
    std::vector<double> trajectory{table.rating(policy_id)};
    std::size_t i = 0;
    while (i < matches.size()) {
        const auto iteration = matches[i].iteration;
        if (iteration < trajectory.size()) throw InvalidArgument("match log is not ordered by iteration");
        // Iterations without records leave the rating unchanged.
        while (trajectory.size() < iteration) trajectory.push_back(table.rating(policy_id));
        std::vector<MatchOutcome> outcomes;
        for (; i < matches.size() && matches[i].iteration == iteration; ++i) {
            outcomes.push_back(table.outcome(policy_id, matches[i].opponent_id, matches[i].reward));
        }
        table = update_batch(table, policy_id, outcomes);
        trajectory.push_back(table.rating(policy_id));
    }
    return trajectory;
}

std::vector<double> windowed_means(std::span<const double> values, std::size_t window) {
    if (window == 0) throw InvalidArgument("window must be >= 1");
    std::vector<double> out;
    for (std::size_t start = 0; start + window <= values.size(); start += window) {
        out.push_back(std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(start),
                                      values.begin() + static_cast<std::ptrdiff_t>(start + window), 0.0) /
                      static_cast<double>(window));
    }
    return out;
}

double tail_mean(std::span<const double> values, double fraction) {
    if (values.empty()) throw InvalidArgument("tail_mean of an empty sequence");
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(values.size()) - 1e-9)));
    const auto tail = values.subspan(values.size() - std::min(n, values.size()));
    return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(tail.size());
}

std::vector<SweepResult> temperature_sweep(const RunConfig& base, const ResponseCache& cache,
                                           std::span<const double> temperatures,
                                           const std::optional<std::filesystem::path>& out_dir) {
    if (temperatures.empty()) throw ConfigError("sweep needs at least one temperature");
    std::vector<SweepResult> results;
    for (double temperature : temperatures) {
        RunConfig config = base;
        config.temperature = temperature;

        std::optional<DirectoryRunLog> files;
        if (out_dir) {
            char name[64];
            std::snprintf(name, sizeof name, "T%g", temperature);
            files.emplace(*out_dir / name);
        }
        auto r = run(config, cache, files ? &files->log() : nullptr);

        SweepResult s;
        s.temperature = temperature;
        std::vector<double> elo;
        for (const auto& it : r.summaries) elo.push_back(it.policy_elo);
        s.final_elo = elo.back();
        s.tail_mean_elo = tail_mean(elo, 0.1);
        s.summaries = std::move(r.summaries);
        results.push_back(std::move(s));
    }
    if (out_dir) {
        std::ofstream out(*out_dir / "sweep.csv", std::ios::binary | std::ios::trunc);
        out << "temperature,final_elo,tail_mean_elo,final_skill\n";
        for (const auto& s : results) {
            out << format_real(s.temperature) << ',' << format_rating(s.final_elo) << ','
                << format_rating(s.tail_mean_elo) << ',' << format_real(s.summaries.back().policy_skill) << '\n';
        }
    }
    return results;
}

}  // namespace elo_arena
