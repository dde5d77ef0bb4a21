#include "ibflow/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ibflow {

const char* kCodeVersion = "0.1.0";

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.entries_[key] = value;
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_str(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string s = get_str(key);
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + s);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
    const double v = get_double(key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) throw ConfigError("config key " + key + ": not an integer");
    return i;
}

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

long Config::get_long(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const double v = get_double(key);
    return static_cast<long>(v);
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stoull(get_str(key));
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an unsigned integer");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string s = get_str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config key " + key + ": not a boolean: " + s);
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<int> out;
    std::istringstream is(get_str(key));
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": not an integer list");
        }
    }
    if (out.empty()) throw ConfigError("config key " + key + ": empty list");
    return out;
}

std::string Config::canonical_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

uint64_t Config::hash() const {
    // FNV-1a 64.
    uint64_t h = 1469598103934665603ull;
    for (char c : canonical_text()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

void write_manifest(const std::string& path, const Config& cfg, uint64_t seed,
                    const std::vector<std::string>& command) {
    nlohmann::json j;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(cfg.hash()));
    j["config_hash"] = buf;
    j["seed"] = seed;
    j["code_version"] = kCodeVersion;
    j["command"] = command;
    j["config"] = nlohmann::json::object();
    for (const auto& [k, v] : cfg.entries()) j["config"][k] = v;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write manifest: " + path);
    os << j.dump(2) << '\n';
}

} // namespace ibflow
