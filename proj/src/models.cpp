#include "cohmark/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cohmark/errors.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace cohmark {

std::string to_string(ScorerFamily f) {
    switch (f) {
        case ScorerFamily::classifier: return "classifier";
        case ScorerFamily::cnn: return "cnn";
        case ScorerFamily::discriminative: return "discriminative";
        case ScorerFamily::generative: return "generative";
        case ScorerFamily::similarity_baseline: return "similarity_baseline";
    }
    return "classifier";
}

ScorerFamily family_from_string(const std::string& s) {
    if (s == "classifier") return ScorerFamily::classifier;
    if (s == "cnn") return ScorerFamily::cnn;
    if (s == "discriminative") return ScorerFamily::discriminative;
    if (s == "generative") return ScorerFamily::generative;
    if (s == "similarity_baseline" || s == "baseline") return ScorerFamily::similarity_baseline;
    throw ConfigError("unknown scorer family '" + s + "'");
}

namespace {

std::string direction_to_string(Direction d) {
    switch (d) {
        case Direction::forward: return "forward";
        case Direction::backward: return "backward";
        case Direction::mean: return "mean";
    }
    return "forward";
}

Direction direction_from_string(const std::string& s) {
    if (s == "forward") return Direction::forward;
    if (s == "backward") return Direction::backward;
    if (s == "mean") return Direction::mean;
    throw ConfigError("unknown direction '" + s + "'");
}

}  // namespace

void ScorerConfig::validate() const {
    if (margin <= 0.0) throw ConfigError("margin must be > 0");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (optimizer != "adam" && optimizer != "adamw")
        throw ConfigError("optimizer must be adam or adamw, got '" + optimizer + "'");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (negatives_per_positive < 1) throw ConfigError("negatives_per_positive must be >= 1");
    if (cnn_filters < 1 || cnn_width < 1) throw ConfigError("cnn filters/width must be >= 1");
    if (ppl_floor < 0.0) throw ConfigError("ppl_floor must be >= 0");
}

json ScorerConfig::to_json() const {
    json j;
    j["family"] = cohmark::to_string(family);
    j["backend"] = backend;
    j["margin"] = margin;
    j["hidden"] = hidden;
    j["cnn_filters"] = cnn_filters;
    j["cnn_width"] = cnn_width;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["optimizer"] = optimizer;
    j["weight_decay"] = weight_decay;
    j["max_epochs"] = max_epochs;
    j["patience"] = patience;
    j["runs"] = runs;
    j["negatives_per_positive"] = negatives_per_positive;
    j["ppl_floor"] = ppl_floor;
    j["direction"] = direction_to_string(direction);
    return j;
}

ScorerConfig ScorerConfig::from_json(const json& j) {
    ScorerConfig c;
    c.family = family_from_string(j.at("family").get<std::string>());
    c.backend = j.value("backend", c.backend);
    c.margin = j.value("margin", c.margin);
    c.hidden = j.value("hidden", c.hidden);
    c.cnn_filters = j.value("cnn_filters", c.cnn_filters);
    c.cnn_width = j.value("cnn_width", c.cnn_width);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.optimizer = j.value("optimizer", c.optimizer);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.runs = j.value("runs", c.runs);
    c.negatives_per_positive = j.value("negatives_per_positive", c.negatives_per_positive);
    c.ppl_floor = j.value("ppl_floor", c.ppl_floor);
    c.direction = direction_from_string(j.value("direction", std::string("forward")));
    return c;
}

Vec concat_features(const Vec& u1, const Vec& u2) {
    if (u1.size() != u2.size())
        throw DataError("concat_features: dimension mismatch (" + std::to_string(u1.size()) +
                        " vs " + std::to_string(u2.size()) + ")");
    const std::size_t d = u1.size();
    Vec out(5 * d);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = u1[i];
        out[d + i] = u2[i];
        out[2 * d + i] = u1[i] - u2[i];
        out[3 * d + i] = u1[i] * u2[i];
        out[4 * d + i] = std::fabs(u1[i] - u2[i]);
    }
    return out;
}

// ------------------------------------------------------------------- FfnnHead
//
// flat layout, hidden == 0:  w[in], b
//              hidden  > 0:  W1[hidden][in] row-major, b1[hidden], w2[hidden], b2

FfnnHead::FfnnHead(int in_dim, int hidden) : in_(in_dim), hidden_(hidden) {
    if (in_dim < 1) throw ConfigError("head input dim must be >= 1");
    if (hidden < 0) throw ConfigError("head hidden width must be >= 0");
    std::size_t n = hidden == 0 ? static_cast<std::size_t>(in_dim) + 1
                                : static_cast<std::size_t>(hidden) * in_dim + hidden + hidden + 1;
    params_.assign(n, 0.0);
}

void FfnnHead::init_params(Rng& rng, double scale) {
    for (double& p : params_) p = scale * rng.uniform(-1.0, 1.0);
    initialized_ = true;
}

double FfnnHead::logit(const Vec& x) const {
    if (static_cast<int>(x.size()) != in_)
        throw DataError("head: input dim " + std::to_string(x.size()) + " != " +
                        std::to_string(in_));
    if (hidden_ == 0) {
        double z = params_[in_];
        for (int i = 0; i < in_; ++i) z += params_[i] * x[i];
        return z;
    }
    const double* w1 = params_.data();
    const double* b1 = w1 + static_cast<std::size_t>(hidden_) * in_;
    const double* w2 = b1 + hidden_;
    const double b2 = w2[hidden_];
    double z = b2;
    for (int h = 0; h < hidden_; ++h) {
        double a = b1[h];
        const double* row = w1 + static_cast<std::size_t>(h) * in_;
        for (int i = 0; i < in_; ++i) a += row[i] * x[i];
        z += w2[h] * std::tanh(a);
    }
    return z;
}

void FfnnHead::logit_backward(const Vec& x, double upstream, Vec& grad, Vec* dx) const {
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    if (dx) dx->assign(in_, 0.0);
    if (hidden_ == 0) {
        for (int i = 0; i < in_; ++i) grad[i] += upstream * x[i];
        grad[in_] += upstream;
        if (dx)
            for (int i = 0; i < in_; ++i) (*dx)[i] += upstream * params_[i];
        return;
    }
    const std::size_t w1_off = 0;
    const std::size_t b1_off = static_cast<std::size_t>(hidden_) * in_;
    const std::size_t w2_off = b1_off + hidden_;
    const std::size_t b2_off = w2_off + hidden_;
    for (int h = 0; h < hidden_; ++h) {
        double a = params_[b1_off + h];
        const double* row = params_.data() + w1_off + static_cast<std::size_t>(h) * in_;
        for (int i = 0; i < in_; ++i) a += row[i] * x[i];
        double t = std::tanh(a);
        double w2h = params_[w2_off + h];
        grad[w2_off + h] += upstream * t;
        double da = upstream * w2h * (1.0 - t * t);
        grad[b1_off + h] += da;
        for (int i = 0; i < in_; ++i) {
            grad[w1_off + static_cast<std::size_t>(h) * in_ + i] += da * x[i];
            if (dx) (*dx)[i] += da * row[i];
        }
    }
    grad[b2_off] += upstream;
}

json FfnnHead::to_json() const {
    json j;
    j["in"] = in_;
    j["hidden"] = hidden_;
    j["params"] = params_;
    return j;
}

FfnnHead FfnnHead::from_json(const json& j) {
    FfnnHead h(j.at("in").get<int>(), j.at("hidden").get<int>());
    Vec p = j.at("params").get<Vec>();
    if (p.size() != h.params_.size()) throw DataError("head: parameter blob size mismatch");
    h.params_ = std::move(p);
    h.initialized_ = true;
    return h;
}

// ------------------------------------------------------------------ CnnScorer
//
// layout: K[f][d*width] row-major, bk[f], then head params over the pooled
// filter responses (same layout rules as FfnnHead)

CnnScorer::CnnScorer(int word_dim, int filters, int width, int head_hidden)
    : dim_(word_dim), filters_(filters), width_(width), head_hidden_(head_hidden) {
    if (word_dim < 1 || filters < 1 || width < 1)
        throw ConfigError("cnn: dims/filters/width must be >= 1");
    if (head_hidden < 0) throw ConfigError("cnn: head hidden width must be >= 0");
    std::size_t head = head_hidden == 0
                           ? static_cast<std::size_t>(filters) + 1
                           : static_cast<std::size_t>(head_hidden) * filters + 2 * head_hidden + 1;
    params_.assign(static_cast<std::size_t>(filter_params()) + head, 0.0);
}

void CnnScorer::init_params(Rng& rng, double scale) {
    for (double& p : params_) p = scale * rng.uniform(-1.0, 1.0);
    initialized_ = true;
}

namespace {

// zero-pad on the right so at least one window fits
Mat pad_cols(const Mat& m, int min_cols) {
    if (m.cols >= min_cols) return m;
    Mat out(m.rows, min_cols);
    std::copy(m.data.begin(), m.data.end(), out.data.begin());
    return out;
}

}  // namespace

double CnnScorer::head_logit(const Vec& pooled) const {
    const double* hp = params_.data() + filter_params();
    if (head_hidden_ == 0) {
        double z = hp[filters_];
        for (int f = 0; f < filters_; ++f) z += hp[f] * pooled[f];
        return z;
    }
    const double* w1 = hp;
    const double* b1 = w1 + static_cast<std::size_t>(head_hidden_) * filters_;
    const double* w2 = b1 + head_hidden_;
    double z = w2[head_hidden_];
    for (int h = 0; h < head_hidden_; ++h) {
        double a = b1[h];
        const double* row = w1 + static_cast<std::size_t>(h) * filters_;
        for (int f = 0; f < filters_; ++f) a += row[f] * pooled[f];
        z += w2[h] * std::tanh(a);
    }
    return z;
}

double CnnScorer::logit(const Mat& input) const {
    if (input.rows != dim_) throw DataError("cnn: word-vector dim mismatch");
    Mat m = pad_cols(input, width_);
    const int positions = m.cols - width_ + 1;
    Vec pooled(filters_, 0.0);
    for (int f = 0; f < filters_; ++f) {
        const double* k = params_.data() + static_cast<std::size_t>(f) * dim_ * width_;
        double bias = params_[static_cast<std::size_t>(filters_) * dim_ * width_ + f];
        double best = -HUGE_VAL;
        for (int p = 0; p < positions; ++p) {
            double z = bias;
            for (int c = 0; c < width_; ++c) {
                const double* col = m.col(p + c);
                const double* kc = k + static_cast<std::size_t>(c) * dim_;
                for (int r = 0; r < dim_; ++r) z += kc[r] * col[r];
            }
            best = std::max(best, z);
        }
        pooled[f] = std::max(0.0, best);  // relu-of-max == max-of-relu
    }
    return head_logit(pooled);
}

void CnnScorer::logit_backward(const Mat& input, double upstream, Vec& grad) const {
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    Mat m = pad_cols(input, width_);
    const int positions = m.cols - width_ + 1;

    Vec pooled(filters_, 0.0);
    std::vector<int> argmax(filters_, 0);
    for (int f = 0; f < filters_; ++f) {
        const double* k = params_.data() + static_cast<std::size_t>(f) * dim_ * width_;
        double bias = params_[static_cast<std::size_t>(filters_) * dim_ * width_ + f];
        double best = -HUGE_VAL;
        for (int p = 0; p < positions; ++p) {
            double z = bias;
            for (int c = 0; c < width_; ++c) {
                const double* col = m.col(p + c);
                const double* kc = k + static_cast<std::size_t>(c) * dim_;
                for (int r = 0; r < dim_; ++r) z += kc[r] * col[r];
            }
            if (z > best) {
                best = z;
                argmax[f] = p;
            }
        }
        pooled[f] = std::max(0.0, best);
    }

    // head backward into d(pooled)
    Vec dpooled(filters_, 0.0);
    const std::size_t hoff = filter_params();
    if (head_hidden_ == 0) {
        for (int f = 0; f < filters_; ++f) {
            grad[hoff + f] += upstream * pooled[f];
            dpooled[f] = upstream * params_[hoff + f];
        }
        grad[hoff + filters_] += upstream;
    } else {
        const std::size_t w1o = hoff;
        const std::size_t b1o = w1o + static_cast<std::size_t>(head_hidden_) * filters_;
        const std::size_t w2o = b1o + head_hidden_;
        const std::size_t b2o = w2o + head_hidden_;
        for (int h = 0; h < head_hidden_; ++h) {
            double a = params_[b1o + h];
            const double* row = params_.data() + w1o + static_cast<std::size_t>(h) * filters_;
            for (int f = 0; f < filters_; ++f) a += row[f] * pooled[f];
            double t = std::tanh(a);
            grad[w2o + h] += upstream * t;
            double da = upstream * params_[w2o + h] * (1.0 - t * t);
            grad[b1o + h] += da;
            for (int f = 0; f < filters_; ++f) {
                grad[w1o + static_cast<std::size_t>(h) * filters_ + f] += da * pooled[f];
                dpooled[f] += da * row[f];
            }
        }
        grad[b2o] += upstream;
    }

    // conv backward through the active windows
    for (int f = 0; f < filters_; ++f) {
        if (pooled[f] <= 0.0 || dpooled[f] == 0.0) continue;  // relu gate
        int p = argmax[f];
        std::size_t koff = static_cast<std::size_t>(f) * dim_ * width_;
        for (int c = 0; c < width_; ++c) {
            const double* col = m.col(p + c);
            for (int r = 0; r < dim_; ++r)
                grad[koff + static_cast<std::size_t>(c) * dim_ + r] += dpooled[f] * col[r];
        }
        grad[static_cast<std::size_t>(filters_) * dim_ * width_ + f] += dpooled[f];
    }
}

json CnnScorer::to_json() const {
    json j;
    j["dim"] = dim_;
    j["filters"] = filters_;
    j["width"] = width_;
    j["head_hidden"] = head_hidden_;
    j["params"] = params_;
    return j;
}

CnnScorer CnnScorer::from_json(const json& j) {
    CnnScorer c(j.at("dim").get<int>(), j.at("filters").get<int>(), j.at("width").get<int>(),
                j.at("head_hidden").get<int>());
    Vec p = j.at("params").get<Vec>();
    if (p.size() != c.params_.size()) throw DataError("cnn: parameter blob size mismatch");
    c.params_ = std::move(p);
    c.initialized_ = true;
    return c;
}

// -------------------------------------------------------------------- scoring

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double classifier_score(const std::string& text1, const std::string& text2,
                        const EncoderBackend& backend, const FfnnHead& head) {
    if (!head.initialized()) throw DataError("classifier_score: untrained head");
    Vec x = backend.pair_representation(text1, text2);
    return sigmoid(head.logit(x));
}

double discriminative_score(const std::string& text1, const std::string& text2,
                            const EncoderBackend& backend, const FfnnHead& mlp,
                            Direction direction) {
    if (!mlp.initialized()) throw DataError("discriminative_score: untrained mlp");
    Vec u1 = backend.sentence_vector(text1);
    Vec u2 = backend.sentence_vector(text2);
    switch (direction) {
        case Direction::forward: return mlp.logit(concat_features(u1, u2));
        case Direction::backward: return mlp.logit(concat_features(u2, u1));
        case Direction::mean:
            return 0.5 * (mlp.logit(concat_features(u1, u2)) +
                          mlp.logit(concat_features(u2, u1)));
    }
    return 0.0;
}

double margin_loss(double f_pos, double f_neg, double n) {
    double hinge = n - f_pos + f_neg;
    if (std::isnan(hinge)) return hinge;  // poison, so trainers can abort
    return std::max(0.0, hinge);
}

double sequence_perplexity(const std::string& pair_text, const GenerativeBackend& backend,
                           double floor) {
    std::vector<double> ll = backend.token_loglik(pair_text);
    if (ll.empty()) throw DataError("sequence_perplexity: empty token sequence");
    const double log_floor = floor > 0.0 ? std::log(floor) : 0.0;
    double sum = 0.0;
    for (double l : ll) {
        if (!std::isfinite(l) || l < log_floor) {
            if (floor <= 0.0)
                throw NumericError("sequence_perplexity: zero-probability token");
            l = log_floor;
        }
        if (l > 0.0) l = 0.0;  // defensive clamp for unnormalized backends
        sum += l;
    }
    return std::exp(-sum / static_cast<double>(ll.size()));
}

double generative_score(const std::string& pair_text, const GenerativeBackend& backend,
                        double floor) {
    return 1.0 - sequence_perplexity(pair_text, backend, floor);
}

void finetune_generative(GenerativeBackend& backend,
                         const std::vector<std::pair<std::string, std::string>>& coherent_pairs,
                         int steps, double lr) {
    if (steps > 0 && !backend.supports_training())
        throw CapabilityError("backend '" + backend.name() + "' does not support fine-tuning");
    for (int s = 0; s < steps; ++s)
        for (const auto& [first, second] : coherent_pairs) backend.train_step(first, second, lr);
}

double baseline_similarity_score(const std::string& text1, const std::string& text2,
                                 const EncoderBackend& backend) {
    return cosine(backend.sentence_vector(text1), backend.sentence_vector(text2));
}

Mat build_cnn_input(const std::string& text1, const std::string& text2,
                    const EncoderBackend& backend) {
    if (tokenize(text1).empty() || tokenize(text2).empty())
        throw DataError("build_cnn_input: empty utterance");
    Mat a = backend.word_vectors(text1);
    Mat b = backend.word_vectors(text2);
    Mat out(a.rows, a.cols + b.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
}

double cnn_score(const std::string& text1, const std::string& text2,
                 const EncoderBackend& backend, const CnnScorer& cnn) {
    if (!cnn.initialized()) throw DataError("cnn_score: untrained model");
    return sigmoid(cnn.logit(build_cnn_input(text1, text2, backend)));
}

// ----------------------------------------------------------------- Checkpoint

void Checkpoint::save(const fs::path& path) const {
    json j;
    j["config"] = config.to_json();
    j["parameters"] = parameters;
    j["validation_loss"] = validation_loss;
    j["epoch"] = epoch;
    j["run_seed"] = run_seed;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path.string());
    out << j.dump(1, '\t') << "\n";
}

Checkpoint Checkpoint::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read checkpoint: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    Checkpoint c;
    c.config = ScorerConfig::from_json(j.at("config"));
    c.parameters = j.value("parameters", json::object());
    c.validation_loss = j.value("validation_loss", 0.0);
    c.epoch = j.value("epoch", 0);
    c.run_seed = j.value("run_seed", std::uint64_t{0});
    return c;
}

// --------------------------------------------------------------------- Scorer

Scorer Scorer::from_checkpoint(const Checkpoint& ckpt) {
    Scorer s;
    s.config_ = ckpt.config;
    s.config_.validate();
    s.id_ = to_string(ckpt.config.family) + "/" + ckpt.config.backend;
    switch (ckpt.config.family) {
        case ScorerFamily::classifier:
        case ScorerFamily::discriminative:
            s.encoder_ = make_encoder(ckpt.config.backend);
            if (!ckpt.parameters.contains("head"))
                throw DataError("checkpoint has no trained head for family " +
                                to_string(ckpt.config.family));
            s.head_ = FfnnHead::from_json(ckpt.parameters.at("head"));
            break;
        case ScorerFamily::cnn:
            s.encoder_ = make_encoder(ckpt.config.backend);
            if (!ckpt.parameters.contains("cnn"))
                throw DataError("checkpoint has no trained cnn parameters");
            s.cnn_ = CnnScorer::from_json(ckpt.parameters.at("cnn"));
            break;
        case ScorerFamily::generative:
            if (ckpt.parameters.contains("vocab")) {
                // fine-tuned tabular model reconstructed from the blob
                auto tb = std::make_shared<TrainableBigramLm>(
                    ckpt.parameters.at("vocab").get<std::vector<std::string>>());
                if (ckpt.parameters.contains("bigram_logits")) {
                    Vec logits = ckpt.parameters.at("bigram_logits").get<Vec>();
                    if (logits.size() != tb->logits().size())
                        throw DataError("bigram_logits blob size mismatch");
                    tb->logits() = std::move(logits);
                }
                s.generative_ = std::move(tb);
            } else {
                s.generative_ = make_generative(ckpt.config.backend);
            }
            break;
        case ScorerFamily::similarity_baseline:
            s.encoder_ = make_encoder(ckpt.config.backend);
            break;
    }
    return s;
}

Scorer Scorer::untrained(const ScorerConfig& config) {
    if (config.family != ScorerFamily::generative &&
        config.family != ScorerFamily::similarity_baseline)
        throw DataError("family " + to_string(config.family) +
                        " requires a trained checkpoint");
    Checkpoint c;
    c.config = config;
    c.parameters = json::object();
    return from_checkpoint(c);
}

double Scorer::score(const std::string& text1, const std::string& text2) const {
    switch (config_.family) {
        case ScorerFamily::classifier:
            return classifier_score(text1, text2, *encoder_, head_);
        case ScorerFamily::cnn:
            return cnn_score(text1, text2, *encoder_, cnn_);
        case ScorerFamily::discriminative:
            return discriminative_score(text1, text2, *encoder_, head_, config_.direction);
        case ScorerFamily::generative:
            return generative_score(text1 + " " + text2, *generative_, config_.ppl_floor);
        case ScorerFamily::similarity_baseline:
            return baseline_similarity_score(text1, text2, *encoder_);
    }
    return 0.0;
}

bool Scorer::concurrent_safe() const {
    if (encoder_) return encoder_->concurrent_inference_safe();
    if (generative_) return generative_->concurrent_inference_safe();
    return true;
}

}  // namespace cohmark
