#include "cohmark/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "cohmark/errors.hpp"

namespace cohmark {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& label) {
    Config cfg;
    std::string line;
    std::string current;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ParseError(label + ":" + std::to_string(line_no) +
                                 ": unterminated section header");
            current = trim(t.substr(1, t.size() - 2));
            cfg.section(current);  // materialize, keeps declaration order
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(label + ":" + std::to_string(line_no) + ": expected key = value");
        cfg.set(current, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read config file: " + path.string());
    return parse(in, path.string());
}

const std::vector<std::pair<std::string, std::string>>& Config::section(
    const std::string& name) const {
    for (const auto& [sec, entries] : sections_)
        if (sec == name) return entries;
    static const std::vector<std::pair<std::string, std::string>> empty;
    return empty;
}

std::vector<std::string> Config::section_names() const {
    std::vector<std::string> out;
    for (const auto& [sec, entries] : sections_) {
        (void)entries;
        out.push_back(sec);
    }
    return out;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
    for (auto& [sec, entries] : sections_) {
        if (sec != section) continue;
        for (auto& [k, v] : entries) {
            if (k == key) {
                v = value;
                return;
            }
        }
        entries.emplace_back(key, value);
        return;
    }
    sections_.push_back({section, {{key, value}}});
}

bool Config::has(const std::string& section, const std::string& key) const {
    return get(section, key).has_value();
}

std::optional<std::string> Config::get(const std::string& section,
                                       const std::string& key) const {
    for (const auto& [k, v] : this->section(section))
        if (k == key) return v;
    return std::nullopt;
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
    return get(section, key).value_or(fallback);
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    try {
        return std::stod(*v);
    } catch (const std::exception&) {
        throw ConfigError("config [" + section + "] " + key + ": not a number: '" + *v + "'");
    }
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    try {
        return std::stoi(*v);
    } catch (const std::exception&) {
        throw ConfigError("config [" + section + "] " + key + ": not an integer: '" + *v +
                          "'");
    }
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    std::string t = *v;
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("config [" + section + "] " + key + ": not a boolean: '" + *v + "'");
}

nlohmann::json Config::snapshot() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [sec, entries] : sections_) {
        nlohmann::json js = nlohmann::json::object();
        for (const auto& [k, v] : entries) js[k] = v;
        j[sec.empty() ? "global" : sec] = std::move(js);
    }
    return j;
}

namespace {

Bin parse_interval(const std::string& label, const std::string& text) {
    std::string t = trim(text);
    if (t.size() < 5 || (t.front() != '[' && t.front() != '(') ||
        (t.back() != ']' && t.back() != ')'))
        throw ConfigError("bin '" + label + "': bad interval '" + text + "'");
    Bin b;
    b.label = label;
    b.lo_inclusive = t.front() == '[';
    b.hi_inclusive = t.back() == ']';
    std::string body = t.substr(1, t.size() - 2);
    std::size_t comma = body.find(',');
    if (comma == std::string::npos)
        throw ConfigError("bin '" + label + "': bad interval '" + text + "'");
    try {
        b.lo = std::stod(trim(body.substr(0, comma)));
        b.hi = std::stod(trim(body.substr(comma + 1)));
    } catch (const std::exception&) {
        throw ConfigError("bin '" + label + "': bad interval bounds '" + text + "'");
    }
    return b;
}

}  // namespace

BinSpec bins_from_config(const Config& config, BiomarkerKind kind) {
    std::string name = "bins." + to_string(kind);
    const auto& entries = config.section(name);
    if (entries.empty()) return default_bins(kind);
    BinSpec spec;
    spec.kind = kind;
    for (const auto& [label, interval] : entries) spec.bins.push_back(parse_interval(label, interval));
    spec.validate();
    return spec;
}

}  // namespace cohmark
