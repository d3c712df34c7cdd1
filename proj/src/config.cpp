#include "phasebound/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace phasebound {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Split a bracketed list on top-level commas: "[a, [b, c], d]" -> {"a", "[b, c]", "d"}.
std::vector<std::string> split_list(const std::string& value, bool& ok) {
    ok = false;
    const std::string t = trim(value);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') return {};
    std::vector<std::string> items;
    int depth = 0;
    std::string cur;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        const char c = t[i];
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (c == ',' && depth == 0) {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (depth != 0) return {};
    if (!trim(cur).empty()) items.push_back(trim(cur));
    ok = true;
    return items;
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

} // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << origin << ":" << lineno << ": expected 'key = value', got '" << t << "'";
            throw ConfigError(msg.str());
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) {
            std::ostringstream msg;
            msg << origin << ":" << lineno << ": empty key or value";
            throw ConfigError(msg.str());
        }
        cfg.entries_[key] = Entry{value, lineno};
    }
    return cfg;
}

bool ConfigFile::has(const std::string& key) const { return entries_.count(key) > 0; }

void ConfigFile::set(const std::string& key, const std::string& value) {
    entries_[key] = Entry{value, 0};
}

void ConfigFile::fail(const std::string& key, const std::string& what) const {
    std::ostringstream msg;
    msg << origin_;
    auto it = entries_.find(key);
    if (it != entries_.end() && it->second.line > 0) msg << ":" << it->second.line;
    msg << ": field '" << key << "': " << what;
    throw ConfigError(msg.str());
}

const ConfigFile::Entry& ConfigFile::require(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) fail(key, "missing required field");
    return it->second;
}

double ConfigFile::get_double(const std::string& key) const {
    double v;
    if (!parse_double(require(key).value, v))
        fail(key, "expected a number, got '" + require(key).value + "'");
    return v;
}

long ConfigFile::get_long(const std::string& key) const {
    const double v = get_double(key);
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v) fail(key, "expected an integer");
    return l;
}

std::uint64_t ConfigFile::get_u64(const std::string& key) const {
    const std::string s = require(key).value;
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(key, "expected an unsigned integer, got '" + s + "'");
    return v;
}

std::string ConfigFile::get_string(const std::string& key) const { return require(key).value; }

std::vector<double> ConfigFile::get_double_list(const std::string& key) const {
    const std::string& raw = require(key).value;
    double single;
    if (parse_double(raw, single)) return {single}; // scalar shorthand
    bool ok;
    const auto items = split_list(raw, ok);
    if (!ok) fail(key, "expected a number or a list like [1, 2, 3]");
    std::vector<double> out;
    for (const auto& item : items) {
        double v;
        if (!parse_double(item, v)) fail(key, "bad list element '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) fail(key, "list must not be empty");
    return out;
}

std::vector<std::pair<double, double>> ConfigFile::get_pair_list(const std::string& key) const {
    bool ok;
    const auto items = split_list(require(key).value, ok);
    if (!ok) fail(key, "expected a list like [[c, d], ...]");
    std::vector<std::pair<double, double>> out;
    for (const auto& item : items) {
        bool ok2;
        const auto pair = split_list(item, ok2);
        double c, d;
        if (!ok2 || pair.size() != 2 || !parse_double(pair[0], c) || !parse_double(pair[1], d))
            fail(key, "bad pair '" + item + "', expected [coeff, delay]");
        out.emplace_back(c, d);
    }
    return out;
}

std::vector<std::string> ConfigFile::get_string_list(const std::string& key) const {
    const std::string& raw = require(key).value;
    bool ok;
    auto items = split_list(raw, ok);
    if (!ok) return {raw}; // bare word shorthand
    if (items.empty()) fail(key, "list must not be empty");
    return items;
}

double ConfigFile::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long ConfigFile::get_long_or(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
}

std::string ConfigFile::get_string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

void ConfigFile::ensure_only(const std::vector<std::string>& known) const {
    for (const auto& [key, entry] : entries_) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            std::ostringstream msg;
            msg << origin_ << ":" << entry.line << ": unknown field '" << key << "'";
            throw ConfigError(msg.str());
        }
    }
}

ModelSource model_from_config(const ConfigFile& cfg) {
    ModelSource src;
    if (cfg.has("poles") || cfg.has("zeros")) {
        std::vector<ZeroFactor> zeros;
        if (cfg.has("zeros"))
            for (const auto& [c, d] : cfg.get_pair_list("zeros")) {
                if (d != std::floor(d) || d < 1)
                    throw ConfigError("field 'zeros': delay must be a positive integer");
                zeros.push_back(ZeroFactor{c, static_cast<int>(d)});
            }
        std::vector<double> poles;
        if (cfg.has("poles")) poles = cfg.get_double_list("poles");
        try {
            // gamma only matters for validation here
            const ArmaSpec spec = ArmaSpec::from_zero_pole(zeros, poles, 1.0);
            src.a = spec.a();
            src.b = spec.b();
        } catch (const ModelError& err) {
            throw ConfigError(std::string("invalid model: ") + err.what());
        }
        src.model_id = cfg.get_string_or("model", "custom");
        return src;
    }
    const std::string name = cfg.get_string_or("model", "sm");
    if (name == "sm") {
        const ArmaSpec spec = ArmaSpec::sm_oscillator(1.0);
        src = ModelSource{"sm", spec.a(), spec.b()};
    } else if (name == "wiener") {
        const ArmaSpec spec = ArmaSpec::wiener_emulation(1.0);
        src = ModelSource{"wiener", spec.a(), spec.b()};
    } else {
        throw ConfigError("field 'model': unknown model '" + name +
                          "' (expected sm, wiener, or explicit poles/zeros)");
    }
    return src;
}

} // namespace phasebound
