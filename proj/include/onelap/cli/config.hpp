#pragma once

// Flat key = value configuration with dotted keys.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace onelap::cli {

class Config {
public:
    /// All known keys with their default values.
    static Config defaults();

    /// Parses `key = value` lines; '#' starts a comment. Throws ConfigError.
    void merge_text(const std::string& text, const std::string& origin);
    void merge_file(const std::string& path);
    /// Accepts "key=value".
    void merge_override(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    double number(const std::string& key) const;
    long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<std::string> words(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    /// Sorted "key=value" lines.
    std::string canonical() const;
    /// 64-bit FNV-1a of canonical(), as 16 hex digits.
    std::string hash() const;

private:
    std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a(const std::string& data);

}  // namespace onelap::cli
