#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cohmark/transcript.hpp"

namespace cohmark {

enum class PairLabel { coherent, incoherent };

std::string to_string(PairLabel l);

struct UtterancePair {
    std::string narrative_ref;
    int anchor_index = 0;   // i
    int partner_index = 0;  // j
    PairLabel label = PairLabel::coherent;
};

struct PairSet {
    std::vector<UtterancePair> coherent;    // all (i, i+1)
    std::vector<UtterancePair> incoherent;  // all (i, j), j >= i+2, same narrative
};

// Throws DataError for narratives with fewer than two utterances.
PairSet enumerate_pairs(const Narrative& narrative);

enum class Split { train, validation, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct SplitManifest {
    std::uint64_t seed = 0;
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
    std::map<std::string, Split> assignment;  // subject_id -> split

    std::vector<std::string> subjects(Split s) const;
    void save(const std::filesystem::path& path) const;
    static SplitManifest load(const std::filesystem::path& path);
};

// Partitions subjects (never narratives) with largest-remainder rounding;
// deterministic for a fixed seed. Every nonzero-ratio split receives at
// least one subject or the call fails.
SplitManifest split_by_subject(const Corpus& corpus, std::array<double, 3> ratios,
                               std::uint64_t seed);

// For each coherent anchor, up to per_positive forward non-adjacent partners
// sampled without replacement from that anchor's pool.
std::vector<UtterancePair> resample_negatives(const Narrative& narrative, int per_positive,
                                              std::uint64_t epoch_seed);

// Tab-delimited, ordered by (narrative_ref, anchor, partner); re-export of the
// same list is byte-identical.
void export_pairs(const Corpus& corpus, std::vector<UtterancePair> pairs,
                  const std::filesystem::path& path);

}  // namespace cohmark
