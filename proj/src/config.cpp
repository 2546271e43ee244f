#include "mcrepar/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mcrepar/errors.hpp"

namespace mcrepar {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg, line);
}

double parse_real(const std::string& origin, int line, const std::string& key,
                  const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE)
        fail(origin, line, "key '" + key + "': not a number: '" + text + "'");
    return v;
}

long long parse_int(const std::string& origin, int line, const std::string& key,
                    const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE)
        fail(origin, line, "key '" + key + "': not an integer: '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& origin, int line,
                                    const std::string& key, const std::string& text) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = text.find(',', start);
        const std::string raw = comma == std::string::npos
                                    ? text.substr(start)
                                    : text.substr(start, comma - start);
        const std::string item = trim(raw);
        if (item.empty())
            fail(origin, line, "key '" + key + "': empty list item");
        items.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return items;
}

}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

Config Config::from_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(origin, line_no, "expected 'key = value': '" + line + "'");
        Entry e;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = line_no;
        if (!valid_key(e.key))
            fail(origin, line_no, "bad key '" + e.key + "' (use letters, digits, _)");
        if (e.value.empty())
            fail(origin, line_no, "key '" + e.key + "' has an empty value");
        for (const Entry& prev : cfg.entries_)
            if (prev.key == e.key)
                fail(origin, line_no, "duplicate key '" + e.key + "' (first on line " +
                                          std::to_string(prev.line) + ")");
        cfg.entries_.push_back(std::move(e));
    }
    return cfg;
}

const Config::Entry* Config::find(const std::string& key) const {
    for (const Entry& e : entries_)
        if (e.key == key) return &e;
    return nullptr;
}

Config::Entry* Config::touch(const std::string& key) {
    for (Entry& e : entries_)
        if (e.key == key) {
            e.used = true;
            return &e;
        }
    return nullptr;
}

void Config::missing(const std::string& key) const {
    throw ConfigError(origin_ + ": missing required key '" + key + "'");
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

std::string Config::get_string(const std::string& key) {
    const Entry* e = touch(key);
    if (!e) missing(key);
    return e->value;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
    const Entry* e = touch(key);
    return e ? e->value : fallback;
}

long long Config::get_int(const std::string& key) {
    const Entry* e = touch(key);
    if (!e) missing(key);
    return parse_int(origin_, e->line, key, e->value);
}

long long Config::get_int(const std::string& key, long long fallback) {
    const Entry* e = touch(key);
    return e ? parse_int(origin_, e->line, key, e->value) : fallback;
}

double Config::get_real(const std::string& key) {
    const Entry* e = touch(key);
    if (!e) missing(key);
    return parse_real(origin_, e->line, key, e->value);
}

double Config::get_real(const std::string& key, double fallback) {
    const Entry* e = touch(key);
    return e ? parse_real(origin_, e->line, key, e->value) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) {
    const Entry* e = touch(key);
    if (!e) return fallback;
    const std::string& v = e->value;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(origin_, e->line, "key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> Config::get_string_list(const std::string& key) {
    const Entry* e = touch(key);
    if (!e) missing(key);
    return split_list(origin_, e->line, key, e->value);
}

std::vector<std::string> Config::get_string_list(
    const std::string& key, const std::vector<std::string>& fallback) {
    const Entry* e = touch(key);
    return e ? split_list(origin_, e->line, key, e->value) : fallback;
}

std::vector<double> Config::get_real_list(const std::string& key) {
    const Entry* e = touch(key);
    if (!e) missing(key);
    std::vector<double> out;
    for (const std::string& item : split_list(origin_, e->line, key, e->value))
        out.push_back(parse_real(origin_, e->line, key, item));
    return out;
}

std::vector<double> Config::get_real_list(const std::string& key,
                                          const std::vector<double>& fallback) {
    if (!has(key)) {
        touch(key);
        return fallback;
    }
    return get_real_list(key);
}

std::vector<std::size_t> Config::get_size_list(const std::string& key) {
    const Entry* e = touch(key);
    if (!e) missing(key);
    std::vector<std::size_t> out;
    for (const std::string& item : split_list(origin_, e->line, key, e->value)) {
        const long long v = parse_int(origin_, e->line, key, item);
        if (v < 0)
            fail(origin_, e->line, "key '" + key + "': negative count: " + item);
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<std::size_t> Config::get_size_list(
    const std::string& key, const std::vector<std::size_t>& fallback) {
    if (!has(key)) {
        touch(key);
        return fallback;
    }
    return get_size_list(key);
}

std::vector<std::uint64_t> Config::get_seed_list(const std::string& key) {
    const Entry* e = touch(key);
    if (!e) missing(key);
    std::vector<std::uint64_t> out;
    for (const std::string& item : split_list(origin_, e->line, key, e->value)) {
        const long long v = parse_int(origin_, e->line, key, item);
        if (v < 0) fail(origin_, e->line, "key '" + key + "': negative seed: " + item);
        out.push_back(static_cast<std::uint64_t>(v));
    }
    return out;
}

void Config::require_consumed() const {
    std::string unknown;
    int first_line = 0;
    for (const Entry& e : entries_)
        if (!e.used) {
            if (!unknown.empty()) unknown += ", ";
            unknown += "'" + e.key + "' (line " + std::to_string(e.line) + ")";
            if (first_line == 0) first_line = e.line;
        }
    if (!unknown.empty())
        throw ConfigError(origin_ + ": unknown key(s): " + unknown, first_line);
}

}  // namespace mcrepar
