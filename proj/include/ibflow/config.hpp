#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ibflow/errors.hpp"

namespace ibflow {

/// Flat key = value configuration. Lines are `key = value`, `#` starts a
/// comment, keys are dot-namespaced. Later assignments override earlier ones.
class Config {
public:
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    long get_long(const std::string& key, long fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    /// Sorted `key = value` dump; the manifest hash is FNV-1a over this text.
    std::string canonical_text() const;
    uint64_t hash() const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

/// Reproducibility manifest written beside every output: config hash, the
/// resolved configuration, seed, code version and the invoking command.
void write_manifest(const std::string& path, const Config& cfg, uint64_t seed,
                    const std::vector<std::string>& command);

extern const char* kCodeVersion;

} // namespace ibflow
