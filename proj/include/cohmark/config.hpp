#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cohmark/biomarker.hpp"

#include <nlohmann/json.hpp>

namespace cohmark {

// Flat INI-style configuration: `[section]` headers, `key = value` entries,
// `#` or `;` comments. Key order within a section is preserved.
class Config {
public:
    static Config parse(std::istream& in, const std::string& label = "<config>");
    static Config parse_file(const std::filesystem::path& path);

    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    const std::vector<std::pair<std::string, std::string>>& section(
        const std::string& name) const;
    std::vector<std::string> section_names() const;

    nlohmann::json snapshot() const;

private:
    // section name -> ordered key/value pairs
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
        sections_;
};

// Reads a `[bins.<biomarker>]` section where each key is a bin label and each
// value an interval like "[-6,2]" or "(0.5,1.5]"; falls back to the built-in
// layout when the section is absent.
BinSpec bins_from_config(const Config& config, BiomarkerKind kind);

}  // namespace cohmark
