#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cohmark/metrics.hpp"
#include "cohmark/stats.hpp"
#include "cohmark/transcript.hpp"

namespace cohmark {

struct MarkerPoint {
    int visit_index = 0;
    double value = 0.0;
};

struct MarkerSeries {
    std::string subject_id;
    Diagnosis diagnosis = Diagnosis::other;
    std::vector<MarkerPoint> visits;  // strictly increasing visit_index
};

// Arithmetic mean of the adjacent-pair scores of one narrative.
double narrative_marker(std::span<const double> adjacent_scores);

struct SeriesResult {
    std::vector<MarkerSeries> series;           // subjects with >= 2 visits
    std::vector<std::string> excluded_subjects; // single-visit subjects
};

// Scores every narrative's adjacent pairs and assembles per-subject series in
// visit order.
SeriesResult subject_series(const Corpus& corpus, const Scorer& scorer);

// marker(last) - marker(first)
double delta_end_start(const MarkerSeries& series);

// mean of consecutive visit-to-visit differences
double delta_long(const MarkerSeries& series);

enum class LongPooling {
    per_subject_mean,  // delta_long per subject, then described across subjects
    pooled_diffs       // every consecutive difference pooled across subjects
};

struct CohortSummary {
    Diagnosis cohort = Diagnosis::other;
    stats::Descriptive marker;           // pooled per-narrative markers
    stats::Descriptive delta_end_start;  // per subject
    stats::Descriptive delta_long;
    int n_subjects = 0;
    int n_narratives = 0;
};

struct CohortComparison {
    Diagnosis a = Diagnosis::other;
    Diagnosis b = Diagnosis::other;
    double p_marker = 1.0;
    double p_delta_end_start = 1.0;
    double p_delta_long = 1.0;
};

struct CohortTable {
    std::vector<CohortSummary> rows;
    std::vector<CohortComparison> comparisons;  // Mann-Whitney, each cohort pair
    std::vector<std::string> warnings;
};

CohortTable cohort_table(std::span<const MarkerSeries> series,
                         LongPooling pooling = LongPooling::per_subject_mean);

struct DisruptiveReport {
    std::optional<stats::Descriptive> disruptive;
    std::optional<stats::Descriptive> non_disruptive;
    std::optional<double> pct_delta;       // between the two means
    std::optional<stats::TestResult> t;    // Welch t-test on the two samples
    int n_disruptive = 0;
    int n_total = 0;
    double fraction_disruptive = 0.0;
};

// Adjacent pairs only; a pair is disruptive iff its second utterance carries
// the exclusion flag. One empty side yields a null comparison, not an error.
DisruptiveReport disruptive_analysis(std::span<const ScoredPair> adjacent_scored);

void write_marker_table(std::span<const MarkerSeries> series,
                        const std::filesystem::path& path);
std::vector<MarkerSeries> read_marker_table(const std::filesystem::path& path);
void write_cohort_table(const CohortTable& table, const std::filesystem::path& path);

}  // namespace cohmark
