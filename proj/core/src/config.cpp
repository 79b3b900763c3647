#include "feinfn/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace feinfn {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

/// Strip a trailing comment that starts at an unquoted # or ;.
std::string strip_comment(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '#' || s[i] == ';') return s.substr(0, i);
    }
    return s;
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']' || body.size() < 3) {
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header: " + line);
            }
            section = trim(body.substr(1, body.size() - 2));
            if (section.empty()) {
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            }
            cfg.sections_[section];  // record even if empty
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value, got: " + line);
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        }
        if (cfg.sections_[section].count(key)) {
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key +
                              "' in section [" + section + "]");
        }
        cfg.sections_[section][key] = value;
    }
    return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool ConfigMap::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::optional<std::string> ConfigMap::find(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return std::nullopt;
    auto kt = it->second.find(key);
    if (kt == it->second.end()) return std::nullopt;
    consumed_.insert(section + "." + key);
    return kt->second;
}

std::string ConfigMap::get_str(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    auto v = find(section, key);
    return v ? *v : fallback;
}

long long ConfigMap::get_int(const std::string& section, const std::string& key,
                             long long fallback) const {
    auto v = find(section, key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        long long r = std::stoll(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing characters");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not an integer: " + *v);
    }
}

double ConfigMap::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
    auto v = find(section, key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        double r = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing characters");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not a number: " + *v);
    }
}

bool ConfigMap::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    auto v = find(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError("[" + section + "] " + key + ": not a boolean: " + *v);
}

void ConfigMap::set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = value;
}

void ConfigMap::set_int(const std::string& section, const std::string& key, long long value) {
    set(section, key, std::to_string(value));
}

void ConfigMap::set_double(const std::string& section, const std::string& key, double value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    set(section, key, os.str());
}

void ConfigMap::set_bool(const std::string& section, const std::string& key, bool value) {
    set(section, key, value ? "true" : "false");
}

std::vector<std::string> ConfigMap::unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [section, kv] : sections_) {
        for (const auto& [key, value] : kv) {
            if (!consumed_.count(section + "." + key)) out.push_back(section + "." + key);
        }
    }
    return out;
}

std::string ConfigMap::serialize() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [section, kv] : sections_) {
        if (!first) os << "\n";
        first = false;
        os << "[" << section << "]\n";
        for (const auto& [key, value] : kv) os << key << " = " << value << "\n";
    }
    return os.str();
}

}  // namespace feinfn
