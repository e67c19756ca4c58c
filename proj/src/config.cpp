#include "epitest/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace epitest {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& name) {
    Config cfg;
    cfg.name_ = name;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t cut = line.find_first_of("#;");
        std::string body = trim(cut == std::string::npos ? line : line.substr(0, cut));
        if (body.empty())
            continue;
        if (body.front() == '[') {
            if (body.back() != ']' || body.size() < 3)
                throw ConfigError(name + ":" + std::to_string(line_no) +
                                  ": malformed section header");
            section = trim(body.substr(1, body.size() - 2));
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty() || section.empty())
            throw ConfigError(name + ":" + std::to_string(line_no) +
                              ": key outside a [section] or empty key");
        const std::string full = section + "." + key;
        if (cfg.entries_.count(full))
            throw ConfigError(name + ":" + std::to_string(line_no) + ": duplicate key '" +
                              full + "'");
        cfg.entries_[full] = {value, line_no};
        cfg.order_.push_back(full);
    }
    return cfg;
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    auto it = entries_.find(section + "." + key);
    return it == entries_.end() ? nullptr : &it->second;
}

void Config::missing(const std::string& section, const std::string& key) const {
    throw ConfigError(name_ + ": missing required key '" + key + "' in [" + section + "]");
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e)
        missing(section, key);
    return e->value;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e)
        missing(section, key);
    char* end = nullptr;
    const double v = std::strtod(e->value.c_str(), &end);
    if (end == e->value.c_str() || *end != '\0')
        throw ConfigError(name_ + ":" + std::to_string(e->line) + ": '" + key +
                          "' is not a number");
    return v;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e)
        missing(section, key);
    std::int64_t v = 0;
    const auto res = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (res.ec != std::errc{} || res.ptr != e->value.data() + e->value.size())
        throw ConfigError(name_ + ":" + std::to_string(e->line) + ": '" + key +
                          "' is not an integer");
    return v;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}

std::uint64_t Config::get_uint(const std::string& section, const std::string& key,
                               std::uint64_t fallback) const {
    if (!has(section, key))
        return fallback;
    const std::int64_t v = get_int(section, key);
    if (v < 0)
        throw ConfigError(name_ + ": '" + key + "' must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e)
        return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes")
        return true;
    if (e->value == "false" || e->value == "0" || e->value == "no")
        return false;
    throw ConfigError(name_ + ":" + std::to_string(e->line) + ": '" + key +
                      "' is not a boolean");
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e)
        missing(section, key);
    std::vector<double> out;
    std::istringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            continue;
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0')
            throw ConfigError(name_ + ":" + std::to_string(e->line) + ": '" + key +
                              "' has a non-numeric list item '" + item + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw ConfigError(name_ + ":" + std::to_string(e->line) + ": '" + key +
                          "' must be a non-empty list");
    return out;
}

void Config::require_known(const std::set<std::string>& known) const {
    for (const auto& [full, entry] : entries_) {
        if (!known.count(full))
            throw ConfigError(name_ + ":" + std::to_string(entry.line) + ": unknown key '" +
                              full + "'");
    }
}

std::vector<std::string> Config::dump() const {
    std::vector<std::string> out;
    out.reserve(order_.size());
    for (const auto& full : order_)
        out.push_back(full + " = " + entries_.at(full).value);
    return out;
}

} // namespace epitest
