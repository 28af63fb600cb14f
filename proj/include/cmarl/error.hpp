#pragma once

#include <stdexcept>
#include <string>

namespace cmarl {

// Invalid experiment or model configuration (shape mismatches, bad rates,
// unknown ids). Maps to exit code 3 in the CLI.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// API called out of contract (non-scalar loss, stepping a finished episode,
// out-of-range action). Maps to exit code 2 in the CLI.
class UsageError : public std::logic_error {
public:
    explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

// Dataset collection could not gather enough successful episodes.
class CollectionError : public std::runtime_error {
public:
    CollectionError(const std::string& what, double win_rate)
        : std::runtime_error(what), win_rate_(win_rate) {}
    double win_rate() const { return win_rate_; }

private:
    double win_rate_;
};

// Malformed or unreadable files (checkpoints, datasets, logs).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cmarl
