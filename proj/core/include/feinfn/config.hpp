#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace feinfn {

/// Sectioned key = value configuration text:
///
///   [train]
///   lr = 1e-4        # trailing comments allowed
///
/// Sections and keys are case-sensitive. Parsing is strict: malformed lines
/// raise ConfigError with the line number.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigMap {
public:
    static ConfigMap parse(const std::string& text);
    static ConfigMap parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> find(const std::string& section, const std::string& key) const;

    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    void set_int(const std::string& section, const std::string& key, long long value);
    void set_double(const std::string& section, const std::string& key, double value);
    void set_bool(const std::string& section, const std::string& key, bool value);

    /// Keys present in the file but never read; used to reject typos.
    std::vector<std::string> unconsumed() const;
    std::string serialize() const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    mutable std::set<std::string> consumed_;
};

}  // namespace feinfn
