#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cohmark/models.hpp"
#include "cohmark/pairs.hpp"
#include "cohmark/stats.hpp"
#include "cohmark/transcript.hpp"

namespace cohmark {

struct ScoredPair {
    UtterancePair pair;
    double score = 0.0;
    std::string scorer;
    bool disruptive = false;  // second utterance carried the exclusion code
};

// Scores every pair with the given scorer; fans out across threads when the
// backend declares concurrent inference safe. Scoring failures abort with the
// narrative identifier attached.
std::vector<ScoredPair> score_pairs(const Corpus& corpus,
                                    std::span<const UtterancePair> pairs, const Scorer& scorer);

// |f+ - f-| / ((f+ + f-)/2) * 100; symmetric; errors when the mean is zero.
double pct_delta(double f_pos, double f_neg);

enum class TemporalMode { mean_counterpart, all_counterparts };

struct AccuracyResult {
    double accuracy = 0.0;
    int n_counted = 0;
    int n_excluded = 0;  // anchors (or narratives) without counterparts
};

// Fraction of adjacent pairs scoring strictly above their anchor-sharing
// non-adjacent counterparts (mean of the counterparts, or every one of them).
AccuracyResult temporal_accuracy(std::span<const ScoredPair> scored, TemporalMode mode);

// Fraction of narratives whose mean adjacent score strictly exceeds the mean
// non-adjacent score.
AccuracyResult entire_accuracy(std::span<const ScoredPair> scored);

struct MetricsRow {
    std::string scorer;
    double avg_f_pos = 0.0;
    double avg_f_neg = 0.0;
    double pct_delta_means = 0.0;       // formula applied to the two averages
    double pct_delta_per_anchor = 0.0;  // mean of per-anchor deltas
    double acc_temporal = 0.0;          // mean_counterpart mode
    double acc_temporal_all = 0.0;      // all_counterparts mode
    double acc_entire = 0.0;
    std::optional<double> avg_loss;     // null for families without one
    double gap_p_value = 1.0;           // Mann-Whitney on f+ vs f- samples
    bool significant = false;           // p < 0.05
    int n_pos = 0;
    int n_neg = 0;
};

MetricsRow metrics_report(std::span<const ScoredPair> scored,
                          std::optional<double> avg_loss = std::nullopt);

// Tab-delimited table; scores at 3 decimals, percentages at 1, missing loss
// rendered as "-".
void write_metrics_table(std::span<const MetricsRow> rows, const std::filesystem::path& path);
std::string format_metrics_table(std::span<const MetricsRow> rows);

void write_scored_pairs(std::span<const ScoredPair> scored, const std::filesystem::path& path);
std::vector<ScoredPair> read_scored_pairs(const std::filesystem::path& path);

}  // namespace cohmark
