#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "phasebound/model.hpp"

namespace phasebound {

/// Raised on malformed configuration input; message carries line and field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Flat key/value configuration text.
 *
 * Grammar (one entry per line):
 *   key = value        # comment
 * where value is a number, a bare word, a list [a, b, c], or a list of
 * pairs [[c, d], ...]. Later assignments override earlier ones, which is
 * also how command-line overrides are applied.
 */
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text, const std::string& origin = "<text>");

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    double get_double(const std::string& key) const;
    long get_long(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::pair<double, double>> get_pair_list(const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& key) const;

    double get_double_or(const std::string& key, double fallback) const;
    long get_long_or(const std::string& key, long fallback) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;

    /// Reject unknown keys (typo guard); `known` is the full legal set.
    void ensure_only(const std::vector<std::string>& known) const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries_;
    std::string origin_;

    [[noreturn]] void fail(const std::string& key, const std::string& what) const;
    const Entry& require(const std::string& key) const;
};

/// Tap vectors plus an id; gamma is supplied per run.
struct ModelSource {
    std::string model_id;
    std::vector<double> a;
    std::vector<double> b;
};

/**
 * Build the shaping-filter source from a config: explicit `zeros`/`poles`
 * factors when present, otherwise the named built-in (`model = sm` or
 * `model = wiener`, default sm). Stability is validated here.
 */
ModelSource model_from_config(const ConfigFile& cfg);

} // namespace phasebound
