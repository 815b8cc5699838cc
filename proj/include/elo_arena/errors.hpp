#ifndef ELO_ARENA_ERRORS_HPP
#define ELO_ARENA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace elo_arena {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class MissingAgent : public Error {
public:
    explicit MissingAgent(const std::string& id)
        : Error("unknown agent id: " + id), agent_id(id) {}
    std::string agent_id;
};

class InvalidJudge : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    using Error::Error;
};

class JudgeUnavailable : public Error {
public:
    JudgeUnavailable(const std::string& what, std::string prompt)
        : Error(what), prompt_id(std::move(prompt)) {}
    std::string prompt_id;
};

// noise_lab
class DegenerateDesign : public Error {
public:
    using Error::Error;
};

class InsufficientReplication : public Error {
public:
    using Error::Error;
};

/// Zero regression slope: the absolute judge carries no ranking signal.
class InfiniteNoise : public Error {
public:
    using Error::Error;
};

/// Pairwise accuracy at or below chance, so the comparison noise is unbounded.
class NonIdentifiable : public Error {
public:
    using Error::Error;
};

// cache
class CacheMiss : public Error {
public:
    CacheMiss(std::string prompt, std::string opponent)
        : Error("cache miss for prompt '" + prompt + "', opponent '" + opponent + "'"),
          prompt_id(std::move(prompt)), opponent_id(std::move(opponent)) {}
    std::string prompt_id;
    std::string opponent_id;
};

class DuplicateEntry : public Error {
public:
    using Error::Error;
};

class IncompatibleFormat : public Error {
public:
    using Error::Error;
};

class CorruptCache : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace elo_arena

#endif
