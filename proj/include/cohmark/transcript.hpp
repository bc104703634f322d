#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cohmark {

enum class Diagnosis { healthy, mci, ad, other };

Diagnosis parse_diagnosis(std::string_view label);
std::string to_string(Diagnosis d);

struct Utterance {
    int index = 0;
    std::string speaker;
    std::vector<std::string> words;  // normalized
    bool disruptive = false;         // carried the exclusion code
    std::string raw;                 // source line(s), verbatim

    std::string text() const;  // words joined by single spaces
};

struct SessionMeta {
    std::string subject_id;
    int visit_index = 1;
    Diagnosis diagnosis = Diagnosis::other;
    std::optional<int> mmse;     // 0..30
    std::optional<double> cdr;   // 0..3
    std::optional<int> hdr;      // >= 0

    void validate() const;  // throws DataError on out-of-range values
};

struct Narrative {
    SessionMeta meta;
    std::vector<Utterance> utterances;
    std::string source;  // file path or stream label

    // Unique id within a corpus: "<subject>:<visit>".
    std::string ref() const;
};

struct NormalizeResult {
    std::vector<std::string> words;
    std::set<std::string> codes;  // bracketed codes seen, whitespace-collapsed

    bool has_exclusion() const { return codes.count("+ exc") > 0; }
};

// Strips transcription codes, fillers, retracing and punctuation-only tokens;
// lowercases; collapses whitespace. An empty word list means "drop utterance".
NormalizeResult normalize_text(std::string_view raw);

struct ParseOptions {
    std::vector<std::string> subject_speakers = {"PAR"};
    bool keep_all_speakers = false;
};

struct IngestStats {
    int utterances_kept = 0;
    int utterances_dropped_empty = 0;
    int non_subject_lines = 0;
    int exclusion_codes = 0;
    std::vector<std::string> warnings;
};

// Parses one CHAT-subset transcript. Supported dialect: "chat" —
// `@KEY: value` headers, `*SPK:` utterance tiers (tab or space separated,
// continuation lines indented), `%` dependent tiers (skipped), bracketed
// codes, exclusion code `[+ exc]`. Lines outside the subset produce warnings.
// `defaults` seeds the metadata (e.g. from the filename); header fields
// override it.
Narrative parse_transcript(std::istream& in, const std::string& dialect = "chat",
                           const ParseOptions& opts = {},
                           const std::string& source_label = "<stream>",
                           IngestStats* stats = nullptr,
                           const SessionMeta* defaults = nullptr);

struct Corpus {
    std::vector<Narrative> narratives;

    std::map<std::string, std::vector<const Narrative*>> by_subject() const;
    std::map<Diagnosis, std::vector<const Narrative*>> by_diagnosis() const;
    const Narrative* find(const std::string& ref) const;
    std::size_t subject_count() const { return by_subject().size(); }
};

// Reads every *.cha / *.txt under root (recursively, sorted for determinism).
// Subject id and visit default from the "<subject>-<visit>" filename stem
// (visit suffix taken as 0-based); header fields override the filename and
// metadata-table values override both.
Corpus load_cohort(const std::filesystem::path& root,
                   const std::optional<std::filesystem::path>& metadata = std::nullopt,
                   const ParseOptions& opts = {}, IngestStats* stats = nullptr);

// Serialization used by the CLI run store.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus_file(const std::filesystem::path& path);

}  // namespace cohmark
