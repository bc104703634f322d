#include "cohmark/transcript.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "cohmark/errors.hpp"

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace cohmark {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    bool in_ws = true;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_ws) out.push_back(' ');
            in_ws = true;
        } else {
            out.push_back(c);
            in_ws = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

// bytes >= 0x80 count as word characters so UTF-8 survives
bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool has_word_char(std::string_view s) {
    for (unsigned char c : s)
        if (is_word_char(c)) return true;
    return false;
}

}  // namespace

Diagnosis parse_diagnosis(std::string_view label) {
    std::string l = lower(trim(label));
    if (l.empty()) return Diagnosis::other;
    if (l == "healthy" || l == "control" || l == "hc" || l == "normal") return Diagnosis::healthy;
    if (l == "mci") return Diagnosis::mci;
    if (l == "ad" || l == "probablead" || l == "possiblead" || l == "probable ad" ||
        l == "possible ad" || l == "alzheimer" || l == "alzheimers")
        return Diagnosis::ad;
    return Diagnosis::other;
}

std::string to_string(Diagnosis d) {
    switch (d) {
        case Diagnosis::healthy: return "healthy";
        case Diagnosis::mci: return "MCI";
        case Diagnosis::ad: return "AD";
        case Diagnosis::other: return "other";
    }
    return "other";
}

std::string Utterance::text() const {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out.push_back(' ');
        out += words[i];
    }
    return out;
}

void SessionMeta::validate() const {
    if (mmse && (*mmse < 0 || *mmse > 30))
        throw DataError("mmse out of range [0,30]: " + std::to_string(*mmse));
    if (cdr && (*cdr < 0.0 || *cdr > 3.0))
        throw DataError("cdr out of range [0,3]: " + std::to_string(*cdr));
    if (hdr && *hdr < 0) throw DataError("hdr must be >= 0: " + std::to_string(*hdr));
}

std::string Narrative::ref() const {
    return meta.subject_id + ":" + std::to_string(meta.visit_index);
}

NormalizeResult normalize_text(std::string_view raw) {
    NormalizeResult res;

    // Pass 1: split into word tokens, <...> groups and [...] codes.
    struct Token {
        enum Kind { word, group, code } kind;
        std::string text;                 // word text or code content
        std::vector<std::string> members; // group words
    };
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = raw.size();
    while (i < n) {
        unsigned char c = raw[i];
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c == '[') {
            std::size_t j = raw.find(']', i + 1);
            if (j == std::string_view::npos) j = n;  // unterminated: treat rest as the code
            std::string content = collapse_ws(raw.substr(i + 1, j - i - 1));
            tokens.push_back({Token::code, content, {}});
            i = (j == n) ? n : j + 1;
            continue;
        }
        if (c == '<') {
            std::size_t j = raw.find('>', i + 1);
            if (j == std::string_view::npos) j = n;
            Token g{Token::group, "", {}};
            std::istringstream ss(std::string(raw.substr(i + 1, j - i - 1)));
            std::string w;
            while (ss >> w) g.members.push_back(w);
            tokens.push_back(std::move(g));
            i = (j == n) ? n : j + 1;
            continue;
        }
        std::size_t j = i;
        while (j < n && !std::isspace(static_cast<unsigned char>(raw[j])) && raw[j] != '[' &&
               raw[j] != '<')
            ++j;
        tokens.push_back({Token::word, std::string(raw.substr(i, j - i)), {}});
        i = j;
    }

    // Pass 2: apply codes. Retracing codes drop the preceding word or group;
    // every other code is recorded and removed.
    std::vector<std::vector<std::string>> units;  // each unit: one word or an expanded group
    for (const Token& t : tokens) {
        if (t.kind == Token::code) {
            res.codes.insert(t.text);
            if ((t.text == "/" || t.text == "//" || t.text == "///") && !units.empty())
                units.pop_back();
            continue;
        }
        if (t.kind == Token::group) {
            units.push_back(t.members);
        } else {
            units.push_back({t.text});
        }
    }

    // Pass 3: per-token cleanup.
    for (const auto& unit : units) {
        for (const std::string& w0 : unit) {
            std::string w;
            w.reserve(w0.size());
            for (char c : w0)
                if (c != '(' && c != ')') w.push_back(c);  // (be)cause -> because
            if (w.empty()) continue;
            if (w[0] == '&') continue;  // filler / event marker
            // trim non-word edges, keep internal apostrophes etc.
            std::size_t b = 0, e = w.size();
            while (b < e && !is_word_char(static_cast<unsigned char>(w[b]))) ++b;
            while (e > b && !is_word_char(static_cast<unsigned char>(w[e - 1]))) --e;
            if (b >= e) continue;  // punctuation-only token
            std::string t = lower(w.substr(b, e - b));
            if (t == "xxx" || t == "yyy" || t == "www") continue;  // unintelligible
            if (!has_word_char(t)) continue;
            res.words.push_back(std::move(t));
        }
    }
    return res;
}

namespace {

struct Tier {
    char kind;            // '@', '*' or '%'
    std::string label;    // speaker or header key
    std::string body;     // content after the colon, continuations joined
    std::string raw;      // verbatim physical lines, '\n'-joined
    int line_no;
};

std::vector<Tier> read_tiers(std::istream& in, IngestStats* stats) {
    std::vector<Tier> tiers;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        char c = line[0];
        if (c == '\t' || c == ' ') {
            // continuation of the previous tier
            if (!tiers.empty()) {
                tiers.back().body += " " + trim(line);
                tiers.back().raw += "\n" + line;
            } else if (stats) {
                stats->warnings.push_back("line " + std::to_string(line_no) +
                                          ": continuation without a tier, ignored");
            }
            continue;
        }
        if (c == '@' || c == '*' || c == '%') {
            std::size_t colon = line.find(':');
            if (colon == std::string::npos) {
                if (c == '@') {
                    // bare markers like @Begin / @End / @UTF8 are fine
                    std::string key = trim(line.substr(1));
                    bool ok = !key.empty() &&
                              std::all_of(key.begin(), key.end(), [](unsigned char ch) {
                                  return std::isalnum(ch) || ch == '_';
                              });
                    if (!ok)
                        throw ParseError("line " + std::to_string(line_no) +
                                         ": malformed header '" + line + "'");
                    tiers.push_back({'@', key, "", line, line_no});
                } else if (stats) {
                    stats->warnings.push_back("line " + std::to_string(line_no) +
                                              ": tier without ':' ignored: '" + line + "'");
                }
                continue;
            }
            std::string label = trim(line.substr(1, colon - 1));
            if (label.empty())
                throw ParseError("line " + std::to_string(line_no) + ": malformed header '" +
                                 line + "'");
            tiers.push_back({c, label, trim(line.substr(colon + 1)), line, line_no});
            continue;
        }
        if (stats)
            stats->warnings.push_back("line " + std::to_string(line_no) +
                                      ": unrecognized line ignored: '" + line + "'");
    }
    return tiers;
}

std::optional<double> parse_num(const std::string& s) {
    std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    try {
        std::size_t pos = 0;
        double v = std::stod(t, &pos);
        if (pos != t.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// `@ID:` payloads come in two shapes: "subject=017; visit=2; dx=AD; mmse=21"
// and the pipe-delimited CHAT form "eng|Pitt|PAR|66;|female|ProbableAD|...".
void apply_id_header(const Tier& t, const ParseOptions& opts, SessionMeta& meta,
                     IngestStats* stats) {
    const std::string& body = t.body;
    if (body.find('=') != std::string::npos) {
        std::istringstream ss(body);
        std::string field;
        while (std::getline(ss, field, ';')) {
            std::size_t eq = field.find('=');
            if (eq == std::string::npos) {
                if (trim(field).empty()) continue;
                throw ParseError("line " + std::to_string(t.line_no) +
                                 ": malformed header field '" + field + "'");
            }
            std::string key = lower(trim(field.substr(0, eq)));
            std::string val = trim(field.substr(eq + 1));
            if (key == "subject" || key == "subject_id") {
                meta.subject_id = val;
            } else if (key == "visit" || key == "visit_index") {
                auto v = parse_num(val);
                if (!v)
                    throw ParseError("line " + std::to_string(t.line_no) + ": bad visit '" +
                                     val + "'");
                meta.visit_index = static_cast<int>(*v);
            } else if (key == "dx" || key == "diagnosis") {
                meta.diagnosis = parse_diagnosis(val);
            } else if (key == "mmse") {
                if (auto v = parse_num(val)) meta.mmse = static_cast<int>(*v);
            } else if (key == "cdr") {
                if (auto v = parse_num(val)) meta.cdr = *v;
            } else if (key == "hdr") {
                if (auto v = parse_num(val)) meta.hdr = static_cast<int>(*v);
            } else if (stats) {
                stats->warnings.push_back("line " + std::to_string(t.line_no) +
                                          ": unknown @ID field '" + key + "' ignored");
            }
        }
        return;
    }
    if (body.find('|') != std::string::npos) {
        std::vector<std::string> fields;
        std::istringstream ss(body);
        std::string f;
        while (std::getline(ss, f, '|')) fields.push_back(trim(f));
        // language|corpus|speaker|age|sex|group|...
        if (fields.size() >= 6) {
            const std::string& code = fields[2];
            bool is_subject = opts.keep_all_speakers ||
                              std::find(opts.subject_speakers.begin(),
                                        opts.subject_speakers.end(),
                                        code) != opts.subject_speakers.end();
            if (is_subject) meta.diagnosis = parse_diagnosis(fields[5]);
        }
        return;
    }
    if (stats)
        stats->warnings.push_back("line " + std::to_string(t.line_no) +
                                  ": unparsed @ID payload ignored: '" + body + "'");
}

}  // namespace

Narrative parse_transcript(std::istream& in, const std::string& dialect,
                           const ParseOptions& opts, const std::string& source_label,
                           IngestStats* stats, const SessionMeta* defaults) {
    if (dialect != "chat") throw ConfigError("unknown transcript dialect '" + dialect + "'");

    Narrative nar;
    if (defaults) nar.meta = *defaults;
    nar.source = source_label;
    std::vector<Tier> tiers = read_tiers(in, stats);

    for (const Tier& t : tiers) {
        if (t.kind == '@') {
            if (t.label == "ID") apply_id_header(t, opts, nar.meta, stats);
            continue;  // other headers are outside the subset
        }
        if (t.kind != '*') continue;  // dependent tiers skipped

        bool is_subject = opts.keep_all_speakers ||
                          std::find(opts.subject_speakers.begin(), opts.subject_speakers.end(),
                                    t.label) != opts.subject_speakers.end();
        if (!is_subject) {
            if (stats) ++stats->non_subject_lines;
            continue;
        }
        NormalizeResult norm = normalize_text(t.body);
        if (norm.words.empty()) {
            if (stats) ++stats->utterances_dropped_empty;
            continue;
        }
        Utterance u;
        u.index = static_cast<int>(nar.utterances.size());
        u.speaker = t.label;
        u.words = std::move(norm.words);
        u.disruptive = norm.has_exclusion();
        u.raw = t.raw;
        if (u.disruptive && stats) ++stats->exclusion_codes;
        if (stats) ++stats->utterances_kept;
        nar.utterances.push_back(std::move(u));
    }

    if (nar.utterances.empty()) throw ParseError(source_label + ": no utterances");
    if (nar.meta.subject_id.empty()) nar.meta.subject_id = source_label;
    nar.meta.validate();
    return nar;
}

std::map<std::string, std::vector<const Narrative*>> Corpus::by_subject() const {
    std::map<std::string, std::vector<const Narrative*>> out;
    for (const Narrative& n : narratives) out[n.meta.subject_id].push_back(&n);
    return out;
}

std::map<Diagnosis, std::vector<const Narrative*>> Corpus::by_diagnosis() const {
    std::map<Diagnosis, std::vector<const Narrative*>> out;
    for (const Narrative& n : narratives) out[n.meta.diagnosis].push_back(&n);
    return out;
}

const Narrative* Corpus::find(const std::string& ref) const {
    for (const Narrative& n : narratives)
        if (n.ref() == ref) return &n;
    return nullptr;
}

namespace {

struct MetaRow {
    std::optional<Diagnosis> diagnosis;
    std::optional<int> mmse;
    std::optional<double> cdr;
    std::optional<int> hdr;
};

std::map<std::pair<std::string, int>, MetaRow> read_metadata_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read metadata table: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw ParseError(path.string() + ": empty metadata table");
    char delim = header.find('\t') != std::string::npos ? '\t' : ',';

    auto split = [&](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, delim)) cells.push_back(trim(cell));
        return cells;
    };
    std::vector<std::string> cols = split(header);
    auto col = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (lower(cols[i]) == name) return static_cast<int>(i);
        return -1;
    };
    int c_subj = col("subject_id"), c_visit = col("visit_index"), c_dx = col("diagnosis");
    int c_mmse = col("mmse"), c_cdr = col("cdr"), c_hdr = col("hdr");
    if (c_subj < 0 || c_visit < 0)
        throw ParseError(path.string() + ": metadata table needs subject_id and visit_index");

    std::map<std::pair<std::string, int>, MetaRow> rows;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split(line);
        auto cell = [&](int idx) -> std::string {
            return (idx >= 0 && idx < static_cast<int>(cells.size())) ? cells[idx] : "";
        };
        std::string subj = cell(c_subj);
        auto visit = parse_num(cell(c_visit));
        if (subj.empty() || !visit)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": bad subject/visit key");
        MetaRow row;
        if (!cell(c_dx).empty()) row.diagnosis = parse_diagnosis(cell(c_dx));
        if (auto v = parse_num(cell(c_mmse))) row.mmse = static_cast<int>(*v);
        if (auto v = parse_num(cell(c_cdr))) row.cdr = *v;
        if (auto v = parse_num(cell(c_hdr))) row.hdr = static_cast<int>(*v);
        rows[{subj, static_cast<int>(*visit)}] = row;
    }
    return rows;
}

// "<subject>-<visit>" stem; the numeric suffix is 0-based on disk
void meta_from_filename(const fs::path& p, SessionMeta& meta) {
    std::string stem = p.stem().string();
    std::size_t dash = stem.find_last_of("-_");
    if (dash != std::string::npos && dash + 1 < stem.size()) {
        std::string tail = stem.substr(dash + 1);
        if (std::all_of(tail.begin(), tail.end(),
                        [](unsigned char c) { return std::isdigit(c); })) {
            meta.subject_id = stem.substr(0, dash);
            meta.visit_index = std::stoi(tail) + 1;
            return;
        }
    }
    meta.subject_id = stem;
    meta.visit_index = 1;
}

}  // namespace

Corpus load_cohort(const fs::path& root, const std::optional<fs::path>& metadata,
                   const ParseOptions& opts, IngestStats* stats) {
    if (!fs::exists(root)) throw DataError("cohort root does not exist: " + root.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".cha" || ext == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::map<std::pair<std::string, int>, MetaRow> meta_rows;
    if (metadata) meta_rows = read_metadata_table(*metadata);

    Corpus corpus;
    std::map<std::pair<std::string, int>, std::string> seen;
    for (const fs::path& f : files) {
        std::ifstream in(f);
        if (!in) throw DataError("unreadable transcript: " + f.string());

        SessionMeta defaults;
        meta_from_filename(f, defaults);
        Narrative nar;
        try {
            nar = parse_transcript(in, "chat", opts, f.string(), stats, &defaults);
        } catch (const ParseError& e) {
            std::string msg = e.what();
            if (msg.find(f.string()) == std::string::npos)
                throw ParseError(f.string() + ": " + msg);
            throw;
        }

        if (auto it = meta_rows.find({nar.meta.subject_id, nar.meta.visit_index});
            it != meta_rows.end()) {
            const MetaRow& row = it->second;
            if (row.diagnosis) nar.meta.diagnosis = *row.diagnosis;
            if (row.mmse) nar.meta.mmse = row.mmse;
            if (row.cdr) nar.meta.cdr = row.cdr;
            if (row.hdr) nar.meta.hdr = row.hdr;
            nar.meta.validate();
        }

        auto key = std::make_pair(nar.meta.subject_id, nar.meta.visit_index);
        if (auto it = seen.find(key); it != seen.end())
            throw DataError("duplicate (subject, visit) = (" + key.first + ", " +
                            std::to_string(key.second) + "): " + it->second + " and " +
                            f.string());
        seen[key] = f.string();
        corpus.narratives.push_back(std::move(nar));
    }
    return corpus;
}

namespace {

json meta_to_json(const SessionMeta& m) {
    json j;
    j["subject_id"] = m.subject_id;
    j["visit_index"] = m.visit_index;
    j["diagnosis"] = to_string(m.diagnosis);
    if (m.mmse) j["mmse"] = *m.mmse;
    if (m.cdr) j["cdr"] = *m.cdr;
    if (m.hdr) j["hdr"] = *m.hdr;
    return j;
}

SessionMeta meta_from_json(const json& j) {
    SessionMeta m;
    m.subject_id = j.at("subject_id").get<std::string>();
    m.visit_index = j.at("visit_index").get<int>();
    m.diagnosis = parse_diagnosis(j.at("diagnosis").get<std::string>());
    if (j.contains("mmse")) m.mmse = j["mmse"].get<int>();
    if (j.contains("cdr")) m.cdr = j["cdr"].get<double>();
    if (j.contains("hdr")) m.hdr = j["hdr"].get<int>();
    return m;
}

}  // namespace

void save_corpus(const Corpus& corpus, const fs::path& path) {
    json j;
    j["narratives"] = json::array();
    for (const Narrative& n : corpus.narratives) {
        json jn;
        jn["meta"] = meta_to_json(n.meta);
        jn["source"] = n.source;
        jn["utterances"] = json::array();
        for (const Utterance& u : n.utterances) {
            json ju;
            ju["index"] = u.index;
            ju["speaker"] = u.speaker;
            ju["words"] = u.words;
            ju["disruptive"] = u.disruptive;
            ju["raw"] = u.raw;
            jn["utterances"].push_back(std::move(ju));
        }
        j["narratives"].push_back(std::move(jn));
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write corpus file: " + path.string());
    out << j.dump(1, '\t') << "\n";
}

Corpus load_corpus_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read corpus file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    Corpus corpus;
    for (const json& jn : j.at("narratives")) {
        Narrative n;
        n.meta = meta_from_json(jn.at("meta"));
        n.source = jn.value("source", "");
        for (const json& ju : jn.at("utterances")) {
            Utterance u;
            u.index = ju.at("index").get<int>();
            u.speaker = ju.value("speaker", "");
            u.words = ju.at("words").get<std::vector<std::string>>();
            u.disruptive = ju.value("disruptive", false);
            u.raw = ju.value("raw", "");
            n.utterances.push_back(std::move(u));
        }
        corpus.narratives.push_back(std::move(n));
    }
    return corpus;
}

}  // namespace cohmark
