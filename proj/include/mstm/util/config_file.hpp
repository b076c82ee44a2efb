#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mstm {

/// UTF-8 `key = value` files with `#` comments. Consumers read typed values;
/// any key never consumed is a hard error (silent typos are the main
/// reproducibility hazard).
class ConfigFile {
  public:
    ConfigFile() = default;

    static ConfigFile parse_text(const std::string& text, const std::string& origin = "<text>") {
        ConfigFile cfg;
        cfg.origin_ = origin;
        std::istringstream is(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                            ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                            ": empty key");
            if (!cfg.entries_.emplace(key, value).second)
                throw std::invalid_argument(origin + ": duplicate key '" + key + "'");
        }
        return cfg;
    }

    static ConfigFile parse_file(const std::filesystem::path& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot open config: " + path.string());
        std::stringstream buf;
        buf << is.rdbuf();
        return parse_text(buf.str(), path.string());
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        consumed_.insert(key);
        const auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        consumed_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw std::invalid_argument(origin_ + ": key '" + key + "' is not a number: " +
                                        it->second);
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        consumed_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw std::invalid_argument(origin_ + ": key '" + key +
                                        "' is not a non-negative integer: " + it->second);
        }
    }

    /// Call after reading everything the command understands.
    void reject_unknown_keys() const {
        std::string unknown;
        for (const auto& [key, value] : entries_) {
            if (!consumed_.count(key)) {
                if (!unknown.empty()) unknown += ", ";
                unknown += key;
            }
        }
        if (!unknown.empty())
            throw std::invalid_argument(origin_ + ": unknown keys: " + unknown);
    }

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    static std::string trim(const std::string& s) {
        const auto begin = s.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) return "";
        const auto end = s.find_last_not_of(" \t\r\n");
        return s.substr(begin, end - begin + 1);
    }

    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> consumed_;
    std::string origin_;
};

}  // namespace mstm
