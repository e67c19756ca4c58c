#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace epitest {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sectioned key = value configuration text. '#' and ';' start comments.
/// Every key must belong to the schema the consumer declares: unknown keys
/// are hard errors carrying the offending line number.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& name = "<config>");

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    /// comma-separated list of doubles
    std::vector<double> get_double_list(const std::string& section,
                                        const std::string& key) const;

    /// Throws for the first key not contained in `known` ("section.key").
    void require_known(const std::set<std::string>& known) const;

    /// "key = value" dump of everything parsed, for output-file headers.
    std::vector<std::string> dump() const;

    const std::string& name() const { return name_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::string name_;
    std::map<std::string, Entry> entries_; // "section.key" -> entry
    std::vector<std::string> order_;       // insertion order for dump()

    const Entry* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void missing(const std::string& section, const std::string& key) const;
};

} // namespace epitest
