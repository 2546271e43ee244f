// Line-oriented configuration files for the benchmark commands.
//
// Grammar, one entry per line:
//   key = value         # trailing comment
// '#' starts a comment anywhere; blank lines are skipped; keys are
// [A-Za-z0-9_]+ and may not repeat; list values are comma-separated.
// Every diagnostic carries the 1-based source line, and a command must
// account for every key: get_* marks a key consumed, and require_consumed()
// rejects the leftovers, so misspelled keys fail loudly instead of being
// silently ignored.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mcrepar {

class Config {
  public:
    struct Entry {
        std::string key;
        std::string value;
        int line = 0;
        bool used = false;
    };

    // origin labels diagnostics ("train.conf:7: ...").
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text,
                              const std::string& origin = "<config>");

    bool has(const std::string& key) const;

    // Scalar getters. The one-argument forms throw ConfigError when the key
    // is missing; the defaulted forms fall back. Values must parse fully
    // (no trailing junk) or the entry's line is reported.
    std::string get_string(const std::string& key);
    std::string get_string(const std::string& key, const std::string& fallback);
    long long get_int(const std::string& key);
    long long get_int(const std::string& key, long long fallback);
    double get_real(const std::string& key);
    double get_real(const std::string& key, double fallback);
    bool get_bool(const std::string& key, bool fallback);

    // Comma-separated lists; empty items are errors. The defaulted forms
    // return the fallback when the key is absent.
    std::vector<std::string> get_string_list(const std::string& key);
    std::vector<std::string> get_string_list(const std::string& key,
                                             const std::vector<std::string>& fallback);
    std::vector<double> get_real_list(const std::string& key);
    std::vector<double> get_real_list(const std::string& key,
                                      const std::vector<double>& fallback);
    std::vector<std::size_t> get_size_list(const std::string& key);
    std::vector<std::size_t> get_size_list(const std::string& key,
                                           const std::vector<std::size_t>& fallback);
    std::vector<std::uint64_t> get_seed_list(const std::string& key);

    // Throws ConfigError naming every key no getter consumed.
    void require_consumed() const;

    const std::string& origin() const { return origin_; }
    const std::vector<Entry>& entries() const { return entries_; }

  private:
    const Entry* find(const std::string& key) const;
    Entry* touch(const std::string& key);  // find + mark used, nullptr if absent
    [[noreturn]] void missing(const std::string& key) const;

    std::string origin_;
    std::vector<Entry> entries_;
};

}  // namespace mcrepar
