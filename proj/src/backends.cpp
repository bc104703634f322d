#include "cohmark/backends.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cohmark/errors.hpp"
#include "cohmark/rng.hpp"

namespace cohmark {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

void GenerativeBackend::train_step(const std::string&, const std::string&, double) {
    throw CapabilityError("backend '" + name() + "' does not support training");
}

double GenerativeBackend::conditional_loss(const std::string&, const std::string&) const {
    throw CapabilityError("backend '" + name() + "' does not support training");
}

// ---------------------------------------------------------------- HashEncoder

HashEncoder::HashEncoder(int dim, std::uint64_t salt, bool serial_only)
    : dim_(dim),
      salt_(salt),
      serial_only_(serial_only),
      name_("hash:dim=" + std::to_string(dim)) {
    if (dim < 1) throw ConfigError("hash encoder dim must be >= 1");
}

Vec HashEncoder::word_vector(const std::string& word) const {
    Rng rng(mix_seed(fnv1a64(word), salt_));
    Vec v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = rng.uniform(-1.0, 1.0);
    normalize_inplace(v);
    return v;
}

Mat HashEncoder::word_vectors(const std::string& text) const {
    std::vector<std::string> words = tokenize(text);
    if (words.empty()) throw DataError("word_vectors: empty text");
    Mat m(dim_, static_cast<int>(words.size()));
    for (std::size_t c = 0; c < words.size(); ++c) {
        Vec v = word_vector(words[c]);
        std::copy(v.begin(), v.end(), m.col(static_cast<int>(c)));
    }
    return m;
}

Vec HashEncoder::sentence_vector(const std::string& text) const {
    std::vector<std::string> words = tokenize(text);
    if (words.empty()) throw DataError("sentence_vector: empty text");
    Vec acc(dim_, 0.0);
    for (const std::string& w : words) {
        Vec v = word_vector(w);
        for (int i = 0; i < dim_; ++i) acc[i] += v[i];
    }
    for (double& x : acc) x /= static_cast<double>(words.size());
    normalize_inplace(acc);
    return acc;
}

Vec HashEncoder::pair_representation(const std::string& t1, const std::string& t2) const {
    Vec a = sentence_vector(t1);
    Vec b = sentence_vector(t2);
    Vec out(dim_);
    for (int i = 0; i < dim_; ++i) out[i] = static_cast<double>(dim_) * a[i] * b[i];
    return out;
}

// ------------------------------------------------------------------ UniformLm

UniformLm::UniformLm(int vocab_size)
    : vocab_(vocab_size), name_("uniform:vocab=" + std::to_string(vocab_size)) {
    if (vocab_size < 1) throw ConfigError("uniform lm vocab size must be >= 1");
}

std::vector<double> UniformLm::token_loglik(const std::string& pair_text) const {
    std::vector<std::string> words = tokenize(pair_text);
    return std::vector<double>(words.size(), -std::log(static_cast<double>(vocab_)));
}

// ------------------------------------------------------------------- BigramLm

namespace {
const std::string kBos = "<s>";
}

BigramLm::BigramLm(const std::vector<std::vector<std::string>>& sentences, double add_k)
    : add_k_(add_k), name_("bigram") {
    for (const auto& sent : sentences) {
        std::string prev = kBos;
        for (const std::string& w : sent) {
            counts_[prev][w] += 1;
            context_totals_[prev] += 1;
            vocab_[w] = 1;
            prev = w;
        }
    }
    if (vocab_.empty()) throw DataError("bigram lm: empty training corpus");
}

double BigramLm::token_prob(const std::string& context, const std::string& word) const {
    const double v = static_cast<double>(vocab_.size());
    int joint = 0;
    if (auto it = counts_.find(context); it != counts_.end()) {
        if (auto jt = it->second.find(word); jt != it->second.end()) joint = jt->second;
    }
    int total = 0;
    if (auto it = context_totals_.find(context); it != context_totals_.end()) total = it->second;
    return (joint + add_k_) / (total + add_k_ * v);
}

std::vector<double> BigramLm::token_loglik(const std::string& pair_text) const {
    std::vector<std::string> words = tokenize(pair_text);
    std::vector<double> out;
    out.reserve(words.size());
    std::string prev = kBos;
    for (const std::string& w : words) {
        out.push_back(std::log(token_prob(prev, w)));
        prev = w;
    }
    return out;
}

// ---------------------------------------------------------- TrainableBigramLm

TrainableBigramLm::TrainableBigramLm(std::vector<std::string> vocab)
    : vocab_(std::move(vocab)), name_("trainable_bigram") {
    if (std::find(vocab_.begin(), vocab_.end(), "<unk>") == vocab_.end())
        vocab_.push_back("<unk>");
    for (std::size_t i = 0; i < vocab_.size(); ++i) index_[vocab_[i]] = static_cast<int>(i);
    unk_ = index_.at("<unk>");
    const std::size_t v = vocab_.size();
    logits_.assign((v + 1) * v, 0.0);  // zero logits = uniform start
}

int TrainableBigramLm::id_of(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? unk_ : it->second;
}

Vec TrainableBigramLm::log_softmax_row(int context) const {
    const std::size_t v = vocab_.size();
    const double* row = logits_.data() + static_cast<std::size_t>(context) * v;
    double mx = row[0];
    for (std::size_t i = 1; i < v; ++i) mx = std::max(mx, row[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < v; ++i) sum += std::exp(row[i] - mx);
    double lse = mx + std::log(sum);
    Vec out(v);
    for (std::size_t i = 0; i < v; ++i) out[i] = row[i] - lse;
    return out;
}

std::vector<double> TrainableBigramLm::token_loglik(const std::string& pair_text) const {
    std::vector<std::string> words = tokenize(pair_text);
    std::vector<double> out;
    out.reserve(words.size());
    int ctx = static_cast<int>(vocab_.size());  // start-of-sequence row
    for (const std::string& w : words) {
        int id = id_of(w);
        out.push_back(log_softmax_row(ctx)[id]);
        ctx = id;
    }
    return out;
}

double TrainableBigramLm::conditional_loss(const std::string& source,
                                           const std::string& target) const {
    std::vector<std::string> src = tokenize(source);
    std::vector<std::string> tgt = tokenize(target);
    if (tgt.empty()) throw DataError("conditional_loss: empty target");
    int ctx = src.empty() ? static_cast<int>(vocab_.size()) : id_of(src.back());
    double loss = 0.0;
    for (const std::string& w : tgt) {
        int id = id_of(w);
        loss -= log_softmax_row(ctx)[id];
        ctx = id;
    }
    return loss / static_cast<double>(tgt.size());
}

void TrainableBigramLm::train_step(const std::string& source, const std::string& target,
                                   double lr) {
    std::vector<std::string> src = tokenize(source);
    std::vector<std::string> tgt = tokenize(target);
    if (tgt.empty()) return;
    const std::size_t v = vocab_.size();
    int ctx = src.empty() ? static_cast<int>(v) : id_of(src.back());
    const double scale = lr / static_cast<double>(tgt.size());
    for (const std::string& w : tgt) {
        int id = id_of(w);
        Vec lsm = log_softmax_row(ctx);
        double* row = logits_.data() + static_cast<std::size_t>(ctx) * v;
        for (std::size_t i = 0; i < v; ++i) {
            double p = std::exp(lsm[i]);
            double grad = p - (static_cast<int>(i) == id ? 1.0 : 0.0);
            row[i] -= scale * grad;
        }
        ctx = id;
    }
}

// ------------------------------------------------------------------- registry

namespace {

struct BackendSpec {
    std::string base;
    std::map<std::string, std::string> args;
};

BackendSpec parse_spec(const std::string& spec) {
    BackendSpec out;
    std::size_t colon = spec.find(':');
    out.base = spec.substr(0, colon);
    if (colon != std::string::npos) {
        std::istringstream ss(spec.substr(colon + 1));
        std::string kv;
        while (std::getline(ss, kv, ',')) {
            std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("bad backend argument '" + kv + "' in spec '" + spec + "'");
            out.args[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
    }
    return out;
}

int arg_int(const BackendSpec& s, const std::string& key, int fallback) {
    auto it = s.args.find(key);
    return it == s.args.end() ? fallback : std::stoi(it->second);
}

}  // namespace

std::shared_ptr<EncoderBackend> make_encoder(const std::string& spec) {
    BackendSpec s = parse_spec(spec);
    if (s.base == "hash") {
        int dim = arg_int(s, "dim", 64);
        int salt = arg_int(s, "salt", 0);
        bool serial = arg_int(s, "serial", 0) != 0;
        return std::make_shared<HashEncoder>(dim, static_cast<std::uint64_t>(salt), serial);
    }
    throw ConfigError("unknown encoder backend '" + s.base + "'");
}

std::shared_ptr<GenerativeBackend> make_generative(const std::string& spec) {
    BackendSpec s = parse_spec(spec);
    if (s.base == "uniform") {
        return std::make_shared<UniformLm>(arg_int(s, "vocab", 16));
    }
    if (s.base == "bigram") {
        auto it = s.args.find("file");
        if (it == s.args.end()) throw ConfigError("bigram backend needs file=<path>");
        std::ifstream in(it->second);
        if (!in) throw DataError("cannot read bigram training file: " + it->second);
        std::vector<std::vector<std::string>> sentences;
        std::string line;
        while (std::getline(in, line)) {
            std::vector<std::string> words = tokenize(line);
            if (!words.empty()) sentences.push_back(std::move(words));
        }
        double add_k = 1.0;
        if (auto kt = s.args.find("add_k"); kt != s.args.end()) add_k = std::stod(kt->second);
        return std::make_shared<BigramLm>(sentences, add_k);
    }
    if (s.base == "trainable_bigram") {
        std::vector<std::string> vocab;
        if (auto it = s.args.find("vocab_file"); it != s.args.end()) {
            std::ifstream in(it->second);
            if (!in) throw DataError("cannot read vocab file: " + it->second);
            std::string w;
            while (in >> w) vocab.push_back(w);
        }
        return std::make_shared<TrainableBigramLm>(std::move(vocab));
    }
    throw ConfigError("unknown generative backend '" + s.base + "'");
}

}  // namespace cohmark
