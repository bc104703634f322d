#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cohmark/models.hpp"
#include "cohmark/pairs.hpp"
#include "cohmark/transcript.hpp"

namespace cohmark {

struct EpochLog {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct TrainResult {
    Checkpoint best;  // minimum validation loss over the run's epochs
    std::vector<EpochLog> history;
    int epochs_run = 0;
};

// Adam / AdamW over a flat parameter vector.
class Optimizer {
public:
    Optimizer(const std::string& kind, double lr, double weight_decay);
    void step(Vec& params, const Vec& grad);

private:
    double lr_;
    double wd_;
    bool decoupled_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    Vec m_, v_;
};

// BCE training of the classifier or cnn family: all adjacent pairs as
// positives, negatives resampled per epoch (config.negatives_per_positive per
// anchor). Stops after config.patience epochs without validation improvement.
TrainResult train_classifier(const ScorerConfig& config,
                             const std::vector<const Narrative*>& train,
                             const std::vector<const Narrative*>& validation,
                             std::uint64_t run_seed);

// Bi-directional margin training of the discriminative family; each positive
// is matched with one freshly sampled anchor-sharing negative per epoch and
// the encoder stays frozen throughout.
TrainResult train_discriminative(const ScorerConfig& config,
                                 const std::vector<const Narrative*>& train,
                                 const std::vector<const Narrative*>& validation,
                                 std::uint64_t run_seed);

// Conditional language-model fine-tuning on the coherent pairs (first
// utterance as source, second as target); validation loss is the mean
// conditional cross-entropy on the validation positives.
TrainResult train_generative(const ScorerConfig& config,
                             const std::vector<const Narrative*>& train,
                             const std::vector<const Narrative*>& validation,
                             std::uint64_t run_seed);

// Dispatch on config.family (similarity_baseline has nothing to train).
TrainResult train_scorer(const ScorerConfig& config, const std::vector<const Narrative*>& train,
                         const std::vector<const Narrative*>& validation,
                         std::uint64_t run_seed);

struct ParamPool {
    std::vector<double> learning_rates{1e-5, 2e-5, 5e-5, 1e-4, 2e-4};
    std::vector<int> batch_sizes{16, 32, 64, 128};
    std::vector<std::string> optimizers{"adamw", "adam"};
    std::vector<double> margins{3, 5, 7};  // discriminative family only
};

struct GridTrial {
    ScorerConfig config;
    double validation_loss = 0.0;
    int epochs_run = 0;
};

struct GridResult {
    ScorerConfig best;
    std::vector<GridTrial> trials;
};

// Samples up to max_trials distinct configurations from the pool (all of them
// when the pool is small), trains each, returns the argmin validation loss.
GridResult grid_search(const ScorerConfig& base, const ParamPool& pool,
                       const std::vector<const Narrative*>& train,
                       const std::vector<const Narrative*>& validation, std::uint64_t seed,
                       int max_trials = 20);

void write_trials_log(const std::vector<GridTrial>& trials, const std::filesystem::path& path);

}  // namespace cohmark
