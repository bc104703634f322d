#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cohmark/linalg.hpp"

namespace cohmark {

// Sentence/word encoder behind the trainable scorers. Implementations must be
// deterministic in inference mode and keep their output dimension fixed.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;
    virtual const std::string& name() const = 0;
    virtual int dim() const = 0;
    // pooled pair-level vector of dim()
    virtual Vec pair_representation(const std::string& text1, const std::string& text2) const = 0;
    // dim() x n_words, one column per word
    virtual Mat word_vectors(const std::string& text) const = 0;
    virtual Vec sentence_vector(const std::string& text) const = 0;
    virtual bool concurrent_inference_safe() const { return true; }
};

// Left-to-right language model interface used by the perplexity scorer.
class GenerativeBackend {
public:
    virtual ~GenerativeBackend() = default;
    virtual const std::string& name() const = 0;
    // per-token log p(w_i | w_<i); length = token count of the input
    virtual std::vector<double> token_loglik(const std::string& pair_text) const = 0;
    virtual bool supports_training() const { return false; }
    // one gradient step on p(target | source); throws CapabilityError by default
    virtual void train_step(const std::string& source, const std::string& target, double lr);
    virtual double conditional_loss(const std::string& source, const std::string& target) const;
    virtual bool concurrent_inference_safe() const { return true; }
};

// Deterministic hash-based encoder for CPU-only runs. Word vectors come from
// a seeded hash of the word, sentence vectors are the normalized mean, and the
// pair representation is the scaled elementwise product of the two sentence
// vectors.
class HashEncoder : public EncoderBackend {
public:
    explicit HashEncoder(int dim = 64, std::uint64_t salt = 0, bool serial_only = false);
    const std::string& name() const override { return name_; }
    int dim() const override { return dim_; }
    Vec pair_representation(const std::string& t1, const std::string& t2) const override;
    Mat word_vectors(const std::string& text) const override;
    Vec sentence_vector(const std::string& text) const override;
    Vec word_vector(const std::string& word) const;
    bool concurrent_inference_safe() const override { return !serial_only_; }

private:
    int dim_;
    std::uint64_t salt_;
    bool serial_only_;
    std::string name_;
};

// Uniform language model over a fixed vocabulary size: every token gets
// probability 1/V. PPL of any sequence is exactly V.
class UniformLm : public GenerativeBackend {
public:
    explicit UniformLm(int vocab_size);
    const std::string& name() const override { return name_; }
    std::vector<double> token_loglik(const std::string& pair_text) const override;
    int vocab_size() const { return vocab_; }

private:
    int vocab_;
    std::string name_;
};

// Add-k smoothed bigram model estimated from a list of sentences.
class BigramLm : public GenerativeBackend {
public:
    BigramLm(const std::vector<std::vector<std::string>>& sentences, double add_k = 1.0);
    const std::string& name() const override { return name_; }
    std::vector<double> token_loglik(const std::string& pair_text) const override;
    double token_prob(const std::string& context, const std::string& word) const;
    int vocab_size() const { return static_cast<int>(vocab_.size()); }

private:
    std::map<std::string, std::map<std::string, int>> counts_;
    std::map<std::string, int> context_totals_;
    std::map<std::string, int> vocab_;  // word -> id (id unused, map acts as a set)
    double add_k_;
    std::string name_;
};

// Tabular bigram LM with trainable logits (softmax over a fixed vocabulary),
// updated by plain SGD on the conditional cross-entropy of the target tokens.
class TrainableBigramLm : public GenerativeBackend {
public:
    explicit TrainableBigramLm(std::vector<std::string> vocab);
    const std::string& name() const override { return name_; }
    std::vector<double> token_loglik(const std::string& pair_text) const override;
    bool supports_training() const override { return true; }
    void train_step(const std::string& source, const std::string& target, double lr) override;
    double conditional_loss(const std::string& source,
                            const std::string& target) const override;

    const Vec& logits() const { return logits_; }
    Vec& logits() { return logits_; }
    const std::vector<std::string>& vocab() const { return vocab_; }

private:
    int id_of(const std::string& word) const;  // unknown words map to <unk>
    Vec log_softmax_row(int context) const;

    std::vector<std::string> vocab_;
    std::map<std::string, int> index_;
    int unk_;
    Vec logits_;  // (V+1) x V, row-major; last row is the start-of-sequence context
    std::string name_;
};

// Backend registry. Specs are "name" or "name:key=value,key=value", e.g.
// "hash:dim=48,salt=7", "uniform:vocab=16", "trainable_bigram:vocab_file=...".
std::shared_ptr<EncoderBackend> make_encoder(const std::string& spec);
std::shared_ptr<GenerativeBackend> make_generative(const std::string& spec);

std::vector<std::string> tokenize(const std::string& text);

}  // namespace cohmark
