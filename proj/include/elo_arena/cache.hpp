#ifndef ELO_ARENA_CACHE_HPP
#define ELO_ARENA_CACHE_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "elo_arena/judging.hpp"
#include "elo_arena/rating.hpp"

namespace elo_arena {

inline constexpr int kCacheFormatVersion = 1;

/// A frozen opponent: its simulated response distribution and starting Elo.
struct OpponentSpec {
    AgentId id;
    double skill = 0.0;
    double spread = 1.0;
    double init_elo = 1400.0;
    LengthDistribution lengths;
};

struct PromptRecord {
    std::string prompt_id;
    std::optional<std::string> text;
};

/// Newline-delimited {prompt_id, text?} records.
std::vector<PromptRecord> read_prompts(std::istream& in);
std::vector<PromptRecord> load_prompts(const std::string& path);

/// Pre-generated opponent responses keyed by (prompt_id, opponent_id).
/// Write-once: nothing mutates a cache after it is built or loaded.
class ResponseCache {
public:
    using Key = std::pair<std::string, AgentId>;

    ResponseCache() = default;
    ResponseCache(std::vector<PromptRecord> prompts, std::vector<AgentId> opponents,
                  std::map<Key, ResponseSample> entries, std::uint64_t seed);

    const std::vector<std::string>& manifest() const { return manifest_; }
    const std::map<std::string, std::string>& prompt_texts() const { return prompt_texts_; }
    const std::vector<AgentId>& opponents() const { return opponents_; }
    const std::map<Key, ResponseSample>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::uint64_t seed() const { return seed_; }
    int version() const { return version_; }

    bool contains(const std::string& prompt_id, const AgentId& opponent_id) const;

    /// Throws CacheMiss unless every (manifest prompt, pool opponent) pair is present.
    void check_complete(std::span<const AgentId> opponent_ids) const;

    bool operator==(const ResponseCache&) const = default;

private:
    std::vector<std::string> manifest_;
    std::map<std::string, std::string> prompt_texts_;
    std::vector<AgentId> opponents_;
    std::map<Key, ResponseSample> entries_;
    std::uint64_t seed_ = 0;
    int version_ = kCacheFormatVersion;
};

/// Simulated cache: quality ~ N(skill, spread²), words from the opponent's
/// length distribution, each entry seeded from (seed, prompt, opponent).
ResponseCache build_cache(std::span<const PromptRecord> prompts, std::span<const OpponentSpec> opponents,
                          std::uint64_t seed);

/// Cache from pre-generated texts, one {prompt_id, opponent_id, text, quality?,
/// word_count?} record per line. Missing word counts are counted from the text.
ResponseCache ingest_responses(std::span<const PromptRecord> prompts, std::span<const AgentId> opponents,
                               std::istream& responses);

/// Never generates: a missing key throws CacheMiss.
const ResponseSample& lookup(const ResponseCache& cache, const std::string& prompt_id, const AgentId& opponent_id);

void persist(const ResponseCache& cache, std::ostream& out);
void persist(const ResponseCache& cache, const std::string& path);
/// Throws IncompatibleFormat on a version mismatch and CorruptCache on any
/// truncated or malformed content.
ResponseCache load_cache(std::istream& in);
ResponseCache load_cache(const std::string& path);

/// FNV-1a over the persisted form.
std::uint64_t content_hash(const ResponseCache& cache);

}  // namespace elo_arena

#endif
