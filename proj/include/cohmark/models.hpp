#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cohmark/backends.hpp"
#include "cohmark/linalg.hpp"
#include "cohmark/rng.hpp"

#include <nlohmann/json.hpp>

namespace cohmark {

enum class ScorerFamily { classifier, cnn, discriminative, generative, similarity_baseline };

std::string to_string(ScorerFamily f);
ScorerFamily family_from_string(const std::string& s);

enum class Direction { forward, backward, mean };

struct ScorerConfig {
    ScorerFamily family = ScorerFamily::discriminative;
    std::string backend = "hash:dim=64";
    double margin = 5.0;  // discriminative only
    // head layout; hidden < 0 means the family default (classifier/cnn: one
    // hidden layer as wide as the input, discriminative: single linear layer)
    int hidden = -1;
    int cnn_filters = 16;
    int cnn_width = 3;
    double learning_rate = 5e-2;
    int batch_size = 32;
    std::string optimizer = "adam";  // adam | adamw
    double weight_decay = 0.01;      // adamw only
    int max_epochs = 50;
    int patience = 4;
    int runs = 3;
    int negatives_per_positive = 7;  // per-epoch resampling for BCE families
    double ppl_floor = 1e-12;        // 0 turns zero-probability tokens into errors
    Direction direction = Direction::forward;

    void validate() const;
    nlohmann::json to_json() const;
    static ScorerConfig from_json(const nlohmann::json& j);
};

// [u1, u2, u1-u2, u1*u2, |u1-u2|]
Vec concat_features(const Vec& u1, const Vec& u2);

// Feed-forward head over a flat parameter vector. hidden == 0 is a single
// affine layer; hidden > 0 adds one tanh layer of that width. Exposes
// logit + parameter/input gradients so the trainers and the finite-difference
// checks share one code path.
class FfnnHead {
public:
    FfnnHead() = default;
    FfnnHead(int in_dim, int hidden);

    void init_params(Rng& rng, double scale = 0.1);
    bool initialized() const { return initialized_; }
    int in_dim() const { return in_; }
    int hidden() const { return hidden_; }
    int n_params() const { return static_cast<int>(params_.size()); }
    Vec& params() { return params_; }
    const Vec& params() const { return params_; }

    double logit(const Vec& x) const;
    // accumulates upstream * d(logit)/d(params) into grad (same layout as
    // params); optionally returns upstream * d(logit)/d(x)
    void logit_backward(const Vec& x, double upstream, Vec& grad, Vec* dx = nullptr) const;

    nlohmann::json to_json() const;
    static FfnnHead from_json(const nlohmann::json& j);

private:
    int in_ = 0;
    int hidden_ = 0;
    bool initialized_ = false;
    Vec params_;
};

// 1-D convolution over the word-vector columns, ReLU, max-pool over time,
// then an FfnnHead on the pooled filter responses.
class CnnScorer {
public:
    CnnScorer() = default;
    CnnScorer(int word_dim, int filters, int width, int head_hidden);

    void init_params(Rng& rng, double scale = 0.1);
    bool initialized() const { return initialized_; }
    int word_dim() const { return dim_; }
    int n_params() const { return static_cast<int>(params_.size()); }
    Vec& params() { return params_; }
    const Vec& params() const { return params_; }

    double logit(const Mat& input) const;
    void logit_backward(const Mat& input, double upstream, Vec& grad) const;

    nlohmann::json to_json() const;
    static CnnScorer from_json(const nlohmann::json& j);

private:
    int dim_ = 0;
    int filters_ = 0;
    int width_ = 0;
    int head_hidden_ = 0;
    bool initialized_ = false;
    Vec params_;  // filter bank + biases, then head params

    int filter_params() const { return filters_ * (dim_ * width_ + 1); }
    double head_logit(const Vec& pooled) const;
};

double sigmoid(double z);

// sigmoid(head(pair_representation)); strictly inside (0,1)
double classifier_score(const std::string& text1, const std::string& text2,
                        const EncoderBackend& backend, const FfnnHead& head);

// mlp(concat_features(U1,U2)) with the requested direction; unbounded
double discriminative_score(const std::string& text1, const std::string& text2,
                            const EncoderBackend& backend, const FfnnHead& mlp,
                            Direction direction = Direction::forward);

// max(0, n - f_pos + f_neg)
double margin_loss(double f_pos, double f_neg, double n);

// exp(-mean log p); >= 1 for a normalized model. floor > 0 clamps
// zero-probability tokens, floor == 0 makes them an error.
double sequence_perplexity(const std::string& pair_text, const GenerativeBackend& backend,
                           double floor = 1e-12);

// 1 - PPL; <= 0 always
double generative_score(const std::string& pair_text, const GenerativeBackend& backend,
                        double floor = 1e-12);

// Conditional training with the first utterance as source and the second as
// target; the scoring path is unchanged.
void finetune_generative(GenerativeBackend& backend,
                         const std::vector<std::pair<std::string, std::string>>& coherent_pairs,
                         int steps, double lr);

// cosine of the two sentence vectors
double baseline_similarity_score(const std::string& text1, const std::string& text2,
                                 const EncoderBackend& backend);

// word vectors of utterance 1 then utterance 2, one column per word
Mat build_cnn_input(const std::string& text1, const std::string& text2,
                    const EncoderBackend& backend);

double cnn_score(const std::string& text1, const std::string& text2,
                 const EncoderBackend& backend, const CnnScorer& cnn);

struct Checkpoint {
    ScorerConfig config;
    nlohmann::json parameters;  // family-specific blob (head / cnn / backend state)
    double validation_loss = 0.0;
    int epoch = 0;
    std::uint64_t run_seed = 0;

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

// Uniform scoring interface reconstructed from a checkpoint; this is the only
// object the marker pipeline needs.
class Scorer {
public:
    static Scorer from_checkpoint(const Checkpoint& ckpt);
    // untrained scorer for families without parameters (generative zero-shot,
    // similarity baseline)
    static Scorer untrained(const ScorerConfig& config);

    double score(const std::string& text1, const std::string& text2) const;
    const ScorerConfig& config() const { return config_; }
    const std::string& id() const { return id_; }
    bool concurrent_safe() const;

private:
    ScorerConfig config_;
    std::string id_;
    std::shared_ptr<EncoderBackend> encoder_;
    std::shared_ptr<GenerativeBackend> generative_;
    FfnnHead head_;
    CnnScorer cnn_;
};

}  // namespace cohmark
