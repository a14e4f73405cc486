#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "nok/errors.hpp"

namespace nok {

/// Flat key = value configuration text. '#' starts a comment; blank lines are
/// ignored; keys are dotted paths (e.g. "train.epochs"). Every key must be
/// consumed by a typed getter; leftovers are rejected by require_consumed().
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Throws config_error naming the first unknown (never-read) key.
    void require_consumed() const;

    /// Stable fingerprint of the parsed key/value pairs (for run manifests).
    std::string fingerprint() const;

    const std::vector<std::pair<std::string, std::string>>& items() const { return order_; }

private:
    const std::string* lookup(const std::string& key) const;
    std::map<std::string, std::string> kv_;
    std::vector<std::pair<std::string, std::string>> order_;
    mutable std::set<std::string> used_;
};

} // namespace nok
