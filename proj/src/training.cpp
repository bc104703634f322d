#include "cohmark/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "cohmark/errors.hpp"

using nlohmann::json;

namespace cohmark {

Optimizer::Optimizer(const std::string& kind, double lr, double weight_decay)
    : lr_(lr), wd_(weight_decay), decoupled_(kind == "adamw") {
    if (kind != "adam" && kind != "adamw") throw ConfigError("unknown optimizer '" + kind + "'");
}

void Optimizer::step(Vec& params, const Vec& grad) {
    if (m_.empty()) {
        m_.assign(params.size(), 0.0);
        v_.assign(params.size(), 0.0);
    }
    if (grad.size() != params.size()) throw DataError("optimizer: gradient size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        double mhat = m_[i] / bc1;
        double vhat = v_[i] / bc2;
        if (decoupled_) params[i] -= lr_ * wd_ * params[i];
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

namespace {

// numerically stable binary cross-entropy on the logit
double bce_loss(double logit, double y) {
    return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::fabs(logit)));
}

double bce_dlogit(double logit, double y) { return sigmoid(logit) - y; }

void check_finite(double loss, int epoch, const char* what) {
    if (!std::isfinite(loss))
        throw NumericError(std::string("non-finite ") + what + " at epoch " +
                           std::to_string(epoch) + "; aborting");
}

// Shared early-stopping walk: run_epoch(epoch) -> train loss,
// val_loss() -> validation loss, snapshot() -> parameter blob.
template <class RunEpoch, class ValLoss, class Snapshot>
TrainResult early_stopping_loop(const ScorerConfig& config, std::uint64_t run_seed,
                                RunEpoch&& run_epoch, ValLoss&& val_loss,
                                Snapshot&& snapshot) {
    TrainResult result;
    result.best.config = config;
    result.best.run_seed = run_seed;
    double best_val = HUGE_VAL;
    int since_best = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double tl = run_epoch(epoch);
        check_finite(tl, epoch, "training loss");
        double vl = val_loss();
        check_finite(vl, epoch, "validation loss");
        result.history.push_back({epoch, tl, vl});
        result.epochs_run = epoch;
        if (vl < best_val) {
            best_val = vl;
            since_best = 0;
            result.best.parameters = snapshot();
            result.best.validation_loss = vl;
            result.best.epoch = epoch;
        } else {
            ++since_best;
        }
        if (since_best >= config.patience) break;
    }
    return result;
}

struct NarrPairs {
    const Narrative* narrative;
    std::vector<std::string> texts;  // per utterance
};

std::vector<NarrPairs> collect(const std::vector<const Narrative*>& narrs, int min_len) {
    std::vector<NarrPairs> out;
    for (const Narrative* n : narrs) {
        if (static_cast<int>(n->utterances.size()) < min_len) continue;
        NarrPairs np;
        np.narrative = n;
        np.texts.reserve(n->utterances.size());
        for (const Utterance& u : n->utterances) np.texts.push_back(u.text());
        out.push_back(std::move(np));
    }
    return out;
}

}  // namespace

// ------------------------------------------------------------ classifier/cnn

namespace {

// x-features for the BCE families; the pair key is i * 1M + j
using FeatKey = std::int64_t;
FeatKey fkey(int i, int j) { return static_cast<FeatKey>(i) * 1000000 + j; }

struct BceData {
    // one entry per narrative
    std::vector<NarrPairs> narrs;
    // classifier: pooled pair vectors; cnn: word matrices
    std::vector<std::map<FeatKey, Vec>> pair_vecs;
    std::vector<std::map<FeatKey, Mat>> pair_mats;
};

BceData build_bce_data(const std::vector<const Narrative*>& narrs, const EncoderBackend& enc,
                       bool cnn) {
    BceData d;
    d.narrs = collect(narrs, 2);
    if (d.narrs.empty()) throw DataError("training: no narratives with >= 2 utterances");
    d.pair_vecs.resize(d.narrs.size());
    d.pair_mats.resize(d.narrs.size());
    for (std::size_t n = 0; n < d.narrs.size(); ++n) {
        const auto& texts = d.narrs[n].texts;
        const int k = static_cast<int>(texts.size());
        for (int i = 0; i + 1 < k; ++i) {
            for (int j = i + 1; j < k; ++j) {
                if (cnn)
                    d.pair_mats[n][fkey(i, j)] = build_cnn_input(texts[i], texts[j], enc);
                else
                    d.pair_vecs[n][fkey(i, j)] = enc.pair_representation(texts[i], texts[j]);
            }
        }
    }
    return d;
}

struct Instance {
    int narr;
    FeatKey key;
    double y;
};

std::vector<Instance> epoch_instances(const BceData& d, int per_positive,
                                      std::uint64_t epoch_seed) {
    std::vector<Instance> out;
    for (std::size_t n = 0; n < d.narrs.size(); ++n) {
        const int k = static_cast<int>(d.narrs[n].texts.size());
        for (int i = 0; i + 1 < k; ++i) out.push_back({static_cast<int>(n), fkey(i, i + 1), 1.0});
        for (const UtterancePair& p :
             resample_negatives(*d.narrs[n].narrative, per_positive, epoch_seed))
            out.push_back({static_cast<int>(n), fkey(p.anchor_index, p.partner_index), 0.0});
    }
    return out;
}

std::vector<Instance> all_instances(const BceData& d) {
    std::vector<Instance> out;
    for (std::size_t n = 0; n < d.narrs.size(); ++n) {
        const int k = static_cast<int>(d.narrs[n].texts.size());
        for (int i = 0; i + 1 < k; ++i) {
            out.push_back({static_cast<int>(n), fkey(i, i + 1), 1.0});
            for (int j = i + 2; j < k; ++j)
                out.push_back({static_cast<int>(n), fkey(i, j), 0.0});
        }
    }
    return out;
}

}  // namespace

TrainResult train_classifier(const ScorerConfig& config,
                             const std::vector<const Narrative*>& train,
                             const std::vector<const Narrative*>& validation,
                             std::uint64_t run_seed) {
    config.validate();
    const bool is_cnn = config.family == ScorerFamily::cnn;
    if (!is_cnn && config.family != ScorerFamily::classifier)
        throw ConfigError("train_classifier: family must be classifier or cnn");
    if (train.empty() || validation.empty())
        throw DataError("train_classifier: train and validation sets must be non-empty");

    auto backend = make_encoder(config.backend);
    BceData tr = build_bce_data(train, *backend, is_cnn);
    BceData va = build_bce_data(validation, *backend, is_cnn);
    std::vector<Instance> val_set = all_instances(va);

    Rng init_rng(mix_seed(run_seed, 0xa111ce5ULL));
    FfnnHead head;
    CnnScorer cnn;
    if (is_cnn) {
        int hh = config.hidden < 0 ? config.cnn_filters : config.hidden;
        cnn = CnnScorer(backend->dim(), config.cnn_filters, config.cnn_width, hh);
        cnn.init_params(init_rng);
    } else {
        int hh = config.hidden < 0 ? backend->dim() : config.hidden;
        head = FfnnHead(backend->dim(), hh);
        head.init_params(init_rng);
    }

    Vec& params = is_cnn ? cnn.params() : head.params();
    Optimizer opt(config.optimizer, config.learning_rate, config.weight_decay);
    Rng shuffle_rng(mix_seed(run_seed, 0x5f0e1ULL));

    auto logit_of = [&](const BceData& d, const Instance& in) {
        return is_cnn ? cnn.logit(d.pair_mats[in.narr].at(in.key))
                      : head.logit(d.pair_vecs[in.narr].at(in.key));
    };

    auto run_epoch = [&](int epoch) {
        std::vector<Instance> inst =
            epoch_instances(tr, config.negatives_per_positive, mix_seed(run_seed, epoch));
        shuffle_rng.shuffle(inst);
        double total = 0.0;
        Vec grad(params.size(), 0.0);
        for (std::size_t start = 0; start < inst.size(); start += config.batch_size) {
            std::size_t end = std::min(inst.size(), start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t t = start; t < end; ++t) {
                const Instance& in = inst[t];
                double z = logit_of(tr, in);
                total += bce_loss(z, in.y);
                double dz = bce_dlogit(z, in.y) / static_cast<double>(end - start);
                if (is_cnn)
                    cnn.logit_backward(tr.pair_mats[in.narr].at(in.key), dz, grad);
                else
                    head.logit_backward(tr.pair_vecs[in.narr].at(in.key), dz, grad);
            }
            opt.step(params, grad);
        }
        return total / static_cast<double>(inst.size());
    };
    auto val_loss = [&]() {
        double total = 0.0;
        for (const Instance& in : val_set) total += bce_loss(logit_of(va, in), in.y);
        return total / static_cast<double>(val_set.size());
    };
    auto snapshot = [&]() {
        json p;
        if (is_cnn)
            p["cnn"] = cnn.to_json();
        else
            p["head"] = head.to_json();
        return p;
    };
    return early_stopping_loop(config, run_seed, run_epoch, val_loss, snapshot);
}

// -------------------------------------------------------------- discriminative

TrainResult train_discriminative(const ScorerConfig& config,
                                 const std::vector<const Narrative*>& train,
                                 const std::vector<const Narrative*>& validation,
                                 std::uint64_t run_seed) {
    config.validate();
    if (config.family != ScorerFamily::discriminative)
        throw ConfigError("train_discriminative: family must be discriminative");
    if (train.empty() || validation.empty())
        throw DataError("train_discriminative: train and validation sets must be non-empty");

    auto backend = make_encoder(config.backend);
    const int d = backend->dim();
    std::vector<NarrPairs> tr = collect(train, 3);  // need at least one negative pool
    std::vector<NarrPairs> va = collect(validation, 3);
    if (tr.empty() || va.empty())
        throw DataError("train_discriminative: no narratives with >= 3 utterances");

    // sentence vectors are fixed (frozen encoder); cache them once
    auto embed = [&](const std::vector<NarrPairs>& set) {
        std::vector<std::vector<Vec>> out(set.size());
        for (std::size_t n = 0; n < set.size(); ++n)
            for (const std::string& t : set[n].texts)
                out[n].push_back(backend->sentence_vector(t));
        return out;
    };
    std::vector<std::vector<Vec>> tr_vecs = embed(tr);
    std::vector<std::vector<Vec>> va_vecs = embed(va);

    const int hidden = config.hidden < 0 ? 0 : config.hidden;  // paper-style single layer
    FfnnHead mlp(5 * d, hidden);
    Rng init_rng(mix_seed(run_seed, 0xa111ce5ULL));
    mlp.init_params(init_rng);
    Optimizer opt(config.optimizer, config.learning_rate, config.weight_decay);
    Rng shuffle_rng(mix_seed(run_seed, 0x5f0e1ULL));

    struct Matched {
        int narr;
        int anchor;   // positive is (anchor, anchor+1)
        int partner;  // negative partner index
    };

    // hinge fwd+bwd for one matched pair; accumulates gradients when given
    auto matched_loss = [&](const std::vector<std::vector<Vec>>& vecs, const Matched& m,
                            Vec* grad) {
        const Vec& a = vecs[m.narr][m.anchor];
        const Vec& p = vecs[m.narr][m.anchor + 1];
        const Vec& q = vecs[m.narr][m.partner];
        double loss = 0.0;
        // forward and backward orders of Eq-style concat features
        const std::array<std::pair<const Vec*, const Vec*>, 2> orders{
            std::make_pair(&a, &p), std::make_pair(&p, &a)};
        const std::array<std::pair<const Vec*, const Vec*>, 2> neg_orders{
            std::make_pair(&a, &q), std::make_pair(&q, &a)};
        for (int dir = 0; dir < 2; ++dir) {
            Vec xp = concat_features(*orders[dir].first, *orders[dir].second);
            Vec xn = concat_features(*neg_orders[dir].first, *neg_orders[dir].second);
            double fp = mlp.logit(xp);
            double fn = mlp.logit(xn);
            double l = margin_loss(fp, fn, config.margin);
            loss += l;
            if (grad && l > 0.0) {
                mlp.logit_backward(xp, -1.0, *grad);
                mlp.logit_backward(xn, +1.0, *grad);
            }
        }
        return loss;
    };

    auto run_epoch = [&](int epoch) {
        std::vector<Matched> inst;
        for (std::size_t n = 0; n < tr.size(); ++n)
            for (const UtterancePair& neg :
                 resample_negatives(*tr[n].narrative, 1, mix_seed(run_seed, epoch)))
                inst.push_back({static_cast<int>(n), neg.anchor_index, neg.partner_index});
        shuffle_rng.shuffle(inst);
        double total = 0.0;
        Vec grad(mlp.params().size(), 0.0);
        for (std::size_t start = 0; start < inst.size(); start += config.batch_size) {
            std::size_t end = std::min(inst.size(), start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            Vec g(mlp.params().size(), 0.0);
            for (std::size_t t = start; t < end; ++t) {
                std::fill(g.begin(), g.end(), 0.0);
                total += matched_loss(tr_vecs, inst[t], &g);
                double scale = 1.0 / static_cast<double>(end - start);
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += scale * g[i];
            }
            opt.step(mlp.params(), grad);
        }
        return total / static_cast<double>(inst.size());
    };
    auto val_loss = [&]() {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t n = 0; n < va.size(); ++n) {
            const int k = static_cast<int>(va[n].texts.size());
            for (int i = 0; i + 1 < k; ++i)
                for (int j = i + 2; j < k; ++j) {
                    total += matched_loss(va_vecs, {static_cast<int>(n), i, j}, nullptr);
                    ++count;
                }
        }
        if (count == 0) throw DataError("validation set has no matched pairs");
        return total / static_cast<double>(count);
    };
    auto snapshot = [&]() {
        json p;
        p["head"] = mlp.to_json();
        return p;
    };
    return early_stopping_loop(config, run_seed, run_epoch, val_loss, snapshot);
}

// ------------------------------------------------------------------ generative

TrainResult train_generative(const ScorerConfig& base_config,
                             const std::vector<const Narrative*>& train,
                             const std::vector<const Narrative*>& validation,
                             std::uint64_t run_seed) {
    base_config.validate();
    if (base_config.family != ScorerFamily::generative)
        throw ConfigError("train_generative: family must be generative");
    ScorerConfig config = base_config;
    config.backend = "trainable_bigram";  // checkpoints are self-describing
    std::vector<NarrPairs> tr = collect(train, 2);
    std::vector<NarrPairs> va = collect(validation, 2);
    if (tr.empty() || va.empty()) throw DataError("train_generative: empty pair sets");

    auto adjacent = [](const std::vector<NarrPairs>& set) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const NarrPairs& np : set)
            for (std::size_t i = 0; i + 1 < np.texts.size(); ++i)
                out.emplace_back(np.texts[i], np.texts[i + 1]);
        return out;
    };
    auto tr_pairs = adjacent(tr);
    auto va_pairs = adjacent(va);

    // vocabulary from the training narratives
    std::set<std::string> vocab_set;
    for (const NarrPairs& np : tr)
        for (const std::string& t : np.texts)
            for (const std::string& w : tokenize(t)) vocab_set.insert(w);
    TrainableBigramLm lm(std::vector<std::string>(vocab_set.begin(), vocab_set.end()));

    Rng shuffle_rng(mix_seed(run_seed, 0x5f0e1ULL));
    auto run_epoch = [&](int) {
        std::vector<std::size_t> order(tr_pairs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle_rng.shuffle(order);
        double total = 0.0;
        for (std::size_t i : order) {
            total += lm.conditional_loss(tr_pairs[i].first, tr_pairs[i].second);
            lm.train_step(tr_pairs[i].first, tr_pairs[i].second, config.learning_rate);
        }
        return total / static_cast<double>(tr_pairs.size());
    };
    auto val_loss = [&]() {
        double total = 0.0;
        for (const auto& [a, b] : va_pairs) total += lm.conditional_loss(a, b);
        return total / static_cast<double>(va_pairs.size());
    };
    auto snapshot = [&]() {
        json p;
        p["vocab"] = lm.vocab();
        p["bigram_logits"] = lm.logits();
        return p;
    };
    return early_stopping_loop(config, run_seed, run_epoch, val_loss, snapshot);
}

TrainResult train_scorer(const ScorerConfig& config, const std::vector<const Narrative*>& train,
                         const std::vector<const Narrative*>& validation,
                         std::uint64_t run_seed) {
    switch (config.family) {
        case ScorerFamily::classifier:
        case ScorerFamily::cnn:
            return train_classifier(config, train, validation, run_seed);
        case ScorerFamily::discriminative:
            return train_discriminative(config, train, validation, run_seed);
        case ScorerFamily::generative:
            return train_generative(config, train, validation, run_seed);
        case ScorerFamily::similarity_baseline:
            throw ConfigError("similarity_baseline has no trainable parameters");
    }
    throw ConfigError("unreachable family");
}

// ----------------------------------------------------------------- grid search

GridResult grid_search(const ScorerConfig& base, const ParamPool& pool,
                       const std::vector<const Narrative*>& train,
                       const std::vector<const Narrative*>& validation, std::uint64_t seed,
                       int max_trials) {
    const bool use_margin = base.family == ScorerFamily::discriminative;
    if (pool.learning_rates.empty() || pool.batch_sizes.empty() || pool.optimizers.empty() ||
        (use_margin && pool.margins.empty()))
        throw ConfigError("grid_search: empty parameter pool");
    for (double lr : pool.learning_rates)
        if (lr <= 0.0) throw ConfigError("grid_search: learning rates must be > 0");
    for (double n : pool.margins)
        if (n <= 0.0) throw ConfigError("grid_search: margins must be > 0");

    const std::size_t margins = use_margin ? pool.margins.size() : 1;
    const std::size_t total =
        pool.learning_rates.size() * pool.batch_sizes.size() * pool.optimizers.size() * margins;

    std::vector<std::size_t> picks;
    if (total <= static_cast<std::size_t>(max_trials)) {
        picks.resize(total);
        for (std::size_t i = 0; i < total; ++i) picks[i] = i;
    } else {
        Rng rng(mix_seed(seed, 0x6e1dULL));
        picks = rng.sample_without_replacement(total, static_cast<std::size_t>(max_trials));
    }

    GridResult result;
    double best_loss = HUGE_VAL;
    for (std::size_t flat : picks) {
        ScorerConfig c = base;
        std::size_t rest = flat;
        c.learning_rate = pool.learning_rates[rest % pool.learning_rates.size()];
        rest /= pool.learning_rates.size();
        c.batch_size = pool.batch_sizes[rest % pool.batch_sizes.size()];
        rest /= pool.batch_sizes.size();
        c.optimizer = pool.optimizers[rest % pool.optimizers.size()];
        rest /= pool.optimizers.size();
        if (use_margin) c.margin = pool.margins[rest % pool.margins.size()];

        GridTrial trial;
        trial.config = c;
        try {
            TrainResult r = train_scorer(c, train, validation, mix_seed(seed, flat));
            trial.validation_loss = r.best.validation_loss;
            trial.epochs_run = r.epochs_run;
        } catch (const NumericError&) {
            trial.validation_loss = HUGE_VAL;  // diverged trial stays in the log
            trial.epochs_run = 0;
        }
        result.trials.push_back(trial);
        if (trial.validation_loss < best_loss) {
            best_loss = trial.validation_loss;
            result.best = c;
        }
    }
    if (!std::isfinite(best_loss)) throw NumericError("grid_search: every trial diverged");
    return result;
}

void write_trials_log(const std::vector<GridTrial>& trials, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write trials log: " + path.string());
    out << "family\tbackend\tlearning_rate\tbatch_size\toptimizer\tmargin\tvalidation_loss\t"
           "epochs_run\n";
    for (const GridTrial& t : trials) {
        out << to_string(t.config.family) << '\t' << t.config.backend << '\t'
            << t.config.learning_rate << '\t' << t.config.batch_size << '\t'
            << t.config.optimizer << '\t' << t.config.margin << '\t' << t.validation_loss
            << '\t' << t.epochs_run << '\n';
    }
}

}  // namespace cohmark
