#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cohmark/config.hpp"
#include "cohmark/models.hpp"
#include "cohmark/pairs.hpp"
#include "cohmark/training.hpp"
#include "cohmark/transcript.hpp"

#include <nlohmann/json.hpp>

namespace cohmark::pipeline {

std::uint64_t file_hash(const std::filesystem::path& path);

// Append-only record of one run directory: inputs, artifacts and the config
// snapshot. Artifacts are stored as paths relative to the run root.
struct RunManifest {
    std::string run_id;
    nlohmann::json config_snapshot = nlohmann::json::object();
    nlohmann::json input_hashes = nlohmann::json::object();
    std::vector<std::string> artifacts;
    std::string created_at;

    void add_input(const std::filesystem::path& path);
    void add_artifact(const std::string& relative);
    void save(const std::filesystem::path& run_dir) const;
    static RunManifest load_or_create(const std::filesystem::path& run_dir);
};

struct IngestOptions {
    std::filesystem::path root;
    std::optional<std::filesystem::path> metadata;
    std::vector<std::string> speakers = {"PAR"};
    bool keep_all_speakers = false;
};

struct PairsOptions {
    std::filesystem::path corpus;
    std::array<double, 3> ratios{0.8, 0.1, 0.1};
    std::uint64_t seed = 1;
};

struct TrainOptions {
    std::filesystem::path corpus;
    std::filesystem::path split;
    ScorerConfig config;
    int grid_trials = 20;  // 0 skips the search
    std::uint64_t seed = 1;
    bool finetune = false;  // generative family only
};

struct EvaluateOptions {
    std::filesystem::path corpus;
    std::filesystem::path split;
    std::filesystem::path checkpoint;  // empty selects an untrained family
    ScorerConfig untrained_config;     // used when checkpoint is empty
    Split eval_split = Split::test;
};

struct MarkerOptions {
    std::filesystem::path corpus;
    std::filesystem::path checkpoint;
    ScorerConfig untrained_config;
    bool use_untrained = false;
};

struct AssociateOptions {
    std::filesystem::path corpus;
    std::filesystem::path markers;  // marker_table.tsv
};

// Each command writes its artifacts under run_dir and updates manifest.json.
// All of them throw cohmark::Error subclasses on failure.
void cmd_ingest(const IngestOptions& opts, const Config& config,
                const std::filesystem::path& run_dir);
void cmd_pairs(const PairsOptions& opts, const Config& config,
               const std::filesystem::path& run_dir);
void cmd_train(const TrainOptions& opts, const Config& config,
               const std::filesystem::path& run_dir);
void cmd_evaluate(const EvaluateOptions& opts, const Config& config,
                  const std::filesystem::path& run_dir);
void cmd_marker(const MarkerOptions& opts, const Config& config,
                const std::filesystem::path& run_dir);
void cmd_associate(const AssociateOptions& opts, const Config& config,
                   const std::filesystem::path& run_dir);
void cmd_report(const std::filesystem::path& run_dir);

// Narratives of the subjects assigned to one split.
std::vector<const Narrative*> narratives_for_split(const Corpus& corpus,
                                                   const SplitManifest& manifest, Split split);

}  // namespace cohmark::pipeline
