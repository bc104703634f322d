#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cohmark/marker.hpp"
#include "cohmark/stats.hpp"
#include "cohmark/transcript.hpp"

namespace cohmark {

enum class BiomarkerKind { mmse_delta, cdr_delta, hdr_last };

std::string to_string(BiomarkerKind k);
BiomarkerKind biomarker_from_string(const std::string& s);

struct Bin {
    std::string label;
    double lo = 0.0;
    double hi = 0.0;
    bool lo_inclusive = true;
    bool hi_inclusive = true;

    bool contains(double v) const;
    std::string interval() const;  // e.g. "[-6,2]" or "(0.5,1.5]"
};

struct BinSpec {
    BiomarkerKind kind = BiomarkerKind::mmse_delta;
    std::vector<Bin> bins;

    void validate() const;  // disjointness and label uniqueness
};

inline constexpr const char* kUnbinned = "unbinned";

// Bin layouts for the three biomarker axes; bounds reproduced verbatim.
BinSpec default_bins(BiomarkerKind kind);

// Total on reals: values outside every interval get the "unbinned" label.
std::string assign_bin(double value, const BinSpec& spec);

struct AssociationRow {
    std::string label;
    Bin interval;
    int n_subjects = 0;
    std::optional<stats::Descriptive> delta_coherence;  // null when the bin is empty
};

struct BinComparison {
    std::string a, b;
    double p_value = 1.0;
};

struct AssociationTable {
    BiomarkerKind kind = BiomarkerKind::mmse_delta;
    std::vector<AssociationRow> rows;
    int n_unbinned = 0;
    std::vector<std::string> unbinned_subjects;
    std::vector<std::string> missing_data_subjects;
    std::vector<BinComparison> tests;  // Mann-Whitney per bin pair, where possible
};

// Per series subject: biomarker change (last - first visit) or last value for
// HDR, binned per spec; the tabulated quantity is the coherence-marker
// delta_end_start. Subjects lacking the biomarker are listed, never dropped
// silently.
AssociationTable association_table(const Corpus& corpus,
                                   std::span<const MarkerSeries> series, const BinSpec& spec);

void write_association_table(const AssociationTable& table,
                             const std::filesystem::path& path);

}  // namespace cohmark
