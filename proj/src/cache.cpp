#include "elo_arena/cache.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "elo_arena/errors.hpp"
#include "elo_arena/random.hpp"

namespace elo_arena {

using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "elo_arena.response_cache";

std::string string_field(const json& j, const char* key) {
    const auto& v = j.at(key);
    return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

std::vector<PromptRecord> read_prompts(std::istream& in) {
    std::vector<PromptRecord> prompts;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            PromptRecord p{string_field(j, "prompt_id"), std::nullopt};
            if (auto it = j.find("text"); it != j.end() && it->is_string()) p.text = it->get<std::string>();
            if (!seen.insert(p.prompt_id).second) throw DuplicateEntry("duplicate prompt_id '" + p.prompt_id + "'");
            prompts.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw InvalidArgument("prompts line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return prompts;
}

std::vector<PromptRecord> load_prompts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open prompts file " + path);
    return read_prompts(in);
}

ResponseCache::ResponseCache(std::vector<PromptRecord> prompts, std::vector<AgentId> opponents,
                             std::map<Key, ResponseSample> entries, std::uint64_t seed)
    : opponents_(std::move(opponents)), entries_(std::move(entries)), seed_(seed) {
    manifest_.reserve(prompts.size());
    for (auto& p : prompts) {
        manifest_.push_back(p.prompt_id);
        if (p.text) prompt_texts_[p.prompt_id] = std::move(*p.text);
    }
}

bool ResponseCache::contains(const std::string& prompt_id, const AgentId& opponent_id) const {
    return entries_.count({prompt_id, opponent_id}) != 0;
}

void ResponseCache::check_complete(std::span<const AgentId> opponent_ids) const {
    for (const auto& p : manifest_) {
        for (const auto& o : opponent_ids) {
            if (!contains(p, o)) throw CacheMiss(p, o);
        }
    }
}

ResponseCache build_cache(std::span<const PromptRecord> prompts, std::span<const OpponentSpec> opponents,
                          std::uint64_t seed) {
    if (prompts.empty()) throw InvalidArgument("build_cache: no prompts");
    if (opponents.empty()) throw InvalidArgument("build_cache: no opponents");

    std::map<ResponseCache::Key, ResponseSample> entries;
    std::vector<AgentId> ids;
    for (const auto& o : opponents) {
        if (!(o.spread >= 0.0) || !std::isfinite(o.skill)) {
            throw InvalidArgument("opponent '" + o.id + "' needs finite skill and spread >= 0");
        }
        o.lengths.validate();
        ids.push_back(o.id);
    }
    for (const auto& p : prompts) {
        for (const auto& o : opponents) {
            Rng rng(derive_seed(seed, {hash_string(p.prompt_id), hash_string(o.id)}));
            std::normal_distribution<double> noise(0.0, 1.0);
            ResponseSample s;
            s.quality = o.skill + o.spread * noise(rng);
            s.word_count = o.lengths.sample(rng);
            if (!entries.emplace(ResponseCache::Key{p.prompt_id, o.id}, s).second) {
                throw DuplicateEntry("duplicate cache entry (" + p.prompt_id + ", " + o.id + ")");
            }
        }
    }
    return {{prompts.begin(), prompts.end()}, std::move(ids), std::move(entries), seed};
}

ResponseCache ingest_responses(std::span<const PromptRecord> prompts, std::span<const AgentId> opponents,
                               std::istream& responses) {
    if (prompts.empty()) throw InvalidArgument("ingest_responses: no prompts");
    if (opponents.empty()) throw InvalidArgument("ingest_responses: no opponents");

    std::map<ResponseCache::Key, ResponseSample> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(responses, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ResponseCache::Key key;
        ResponseSample s;
        try {
            const auto j = json::parse(line);
            key = {string_field(j, "prompt_id"), string_field(j, "opponent_id")};
            s.text = j.at("text").get<std::string>();
            s.quality = j.value("quality", 0.0);
            s.word_count = j.contains("word_count") ? j.at("word_count").get<int>() : count_words(*s.text);
        } catch (const json::exception& e) {
            throw InvalidArgument("responses line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!entries.emplace(key, std::move(s)).second) {
            throw DuplicateEntry("duplicate response for (" + key.first + ", " + key.second + ")");
        }
    }
    ResponseCache cache({prompts.begin(), prompts.end()}, {opponents.begin(), opponents.end()}, std::move(entries), 0);
    cache.check_complete(opponents);
    return cache;
}

const ResponseSample& lookup(const ResponseCache& cache, const std::string& prompt_id, const AgentId& opponent_id) {
    auto it = cache.entries().find({prompt_id, opponent_id});
    if (it == cache.entries().end()) throw CacheMiss(prompt_id, opponent_id);
    return it->second;
}

void persist(const ResponseCache& cache, std::ostream& out) {
    json prompts = json::array();
    for (const auto& id : cache.manifest()) {
        json p = {{"prompt_id", id}};
        if (auto it = cache.prompt_texts().find(id); it != cache.prompt_texts().end()) p["text"] = it->second;
        prompts.push_back(p);
    }
    const json header = {{"format", kFormatTag},
                         {"version", cache.version()},
                         {"seed", cache.seed()},
                         {"prompts", prompts},
                         {"opponents", cache.opponents()},
                         {"entries", cache.size()}};
    out << header.dump() << '\n';
    for (const auto& [key, s] : cache.entries()) {
        json rec = {{"prompt_id", key.first},
                    {"opponent_id", key.second},
                    {"quality", s.quality},
                    {"word_count", s.word_count}};
        if (s.text) rec["text"] = *s.text;
        out << rec.dump() << '\n';
    }
}

void persist(const ResponseCache& cache, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write cache file " + path);
    persist(cache, out);
    if (!out) throw InvalidArgument("failed writing cache file " + path);
}

ResponseCache load_cache(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CorruptCache("cache file is empty");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw CorruptCache(std::string("unreadable cache header: ") + e.what());
    }
    if (!header.is_object() || header.value("format", "") != kFormatTag) {
        throw CorruptCache("not a response cache file");
    }
    const int version = header.value("version", -1);
    if (version != kCacheFormatVersion) {
        throw IncompatibleFormat("cache format version " + std::to_string(version) + ", expected " +
                                 std::to_string(kCacheFormatVersion));
    }

    std::vector<PromptRecord> prompts;
    std::vector<AgentId> opponents;
    std::size_t expected_entries = 0;
    std::uint64_t seed = 0;
    std::map<ResponseCache::Key, ResponseSample> entries;
    try {
        for (const auto& p : header.at("prompts")) {
            PromptRecord r{p.at("prompt_id").get<std::string>(), std::nullopt};
            if (p.contains("text")) r.text = p.at("text").get<std::string>();
            prompts.push_back(std::move(r));
        }
        opponents = header.at("opponents").get<std::vector<AgentId>>();
        expected_entries = header.at("entries").get<std::size_t>();
        seed = header.at("seed").get<std::uint64_t>();

        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto j = json::parse(line);
            ResponseSample s;
            s.quality = j.at("quality").get<double>();
            s.word_count = j.at("word_count").get<int>();
            if (j.contains("text")) s.text = j.at("text").get<std::string>();
            ResponseCache::Key key{j.at("prompt_id").get<std::string>(), j.at("opponent_id").get<std::string>()};
            if (!entries.emplace(std::move(key), std::move(s)).second) {
                throw CorruptCache("duplicate entry on line " + std::to_string(line_no));
            }
        }
    } catch (const json::exception& e) {
        throw CorruptCache(std::string("malformed cache content: ") + e.what());
    }
    if (entries.size() != expected_entries) {
        throw CorruptCache("cache declares " + std::to_string(expected_entries) + " entries but holds " +
                           std::to_string(entries.size()));
    }
    return {std::move(prompts), std::move(opponents), std::move(entries), seed};
}

ResponseCache load_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptCache("cannot open cache file " + path);
    return load_cache(in);
}

std::uint64_t content_hash(const ResponseCache& cache) {
    std::ostringstream os;
    persist(cache, os);
    return hash_string(os.str());
}

}  // namespace elo_arena
