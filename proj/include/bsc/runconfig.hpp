#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key = value configuration ("#" starts a comment). Values are typed at
/// access time; malformed values raise ConfigError.
class RunConfig {
  public:
    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_seed() const { return static_cast<std::uint64_t>(get_int("seed", 0)); }
    std::vector<double> get_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);
    /// FNV-1a hash of the canonicalized key-value content
    std::uint64_t content_hash() const;
    const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

} // namespace bsc
