#include "cohmark/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "cohmark/errors.hpp"

namespace fs = std::filesystem;

namespace cohmark {

std::vector<ScoredPair> score_pairs(const Corpus& corpus,
                                    std::span<const UtterancePair> pairs,
                                    const Scorer& scorer) {
    std::vector<ScoredPair> out(pairs.size());
    std::map<std::string, const Narrative*> cache;
    auto lookup = [&](const std::string& ref) {
        auto it = cache.find(ref);
        if (it != cache.end()) return it->second;
        const Narrative* n = corpus.find(ref);
        if (!n) throw DataError("score_pairs: unknown narrative '" + ref + "'");
        cache[ref] = n;
        return n;
    };
    // resolve texts up front so the parallel section touches no shared state
    struct Job {
        std::string t1, t2;
    };
    std::vector<Job> jobs(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const UtterancePair& p = pairs[i];
        const Narrative* n = lookup(p.narrative_ref);
        const auto& utts = n->utterances;
        if (p.anchor_index < 0 || p.partner_index >= static_cast<int>(utts.size()) ||
            p.anchor_index >= p.partner_index)
            throw DataError("score_pairs: bad pair indices in " + p.narrative_ref);
        jobs[i] = {utts[p.anchor_index].text(), utts[p.partner_index].text()};
        out[i].pair = p;
        out[i].scorer = scorer.id();
        out[i].disruptive = utts[p.partner_index].disruptive;
    }

    auto worker = [&](std::size_t begin, std::size_t end, std::string& error) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                out[i].score = scorer.score(jobs[i].t1, jobs[i].t2);
            } catch (const std::exception& e) {
                error = "scoring failed in narrative " + out[i].pair.narrative_ref + ": " +
                        e.what();
                return;
            }
        }
    };

    unsigned hw = std::thread::hardware_concurrency();
    std::size_t n_threads = scorer.concurrent_safe() ? std::max(1u, hw) : 1;
    n_threads = std::min<std::size_t>(n_threads, std::max<std::size_t>(1, pairs.size() / 64));
    if (n_threads <= 1) {
        std::string error;
        worker(0, pairs.size(), error);
        if (!error.empty()) throw Error(error);
    } else {
        std::vector<std::thread> threads;
        std::vector<std::string> errors(n_threads);
        std::size_t chunk = (pairs.size() + n_threads - 1) / n_threads;
        for (std::size_t t = 0; t < n_threads; ++t) {
            std::size_t b = t * chunk;
            std::size_t e = std::min(pairs.size(), b + chunk);
            threads.emplace_back(worker, b, e, std::ref(errors[t]));
        }
        for (auto& th : threads) th.join();
        for (const std::string& err : errors)
            if (!err.empty()) throw Error(err);
    }
    return out;
}

double pct_delta(double f_pos, double f_neg) {
    double mean = (f_pos + f_neg) / 2.0;
    if (mean == 0.0) throw NumericError("pct_delta: mean of inputs is zero");
    return std::fabs(f_pos - f_neg) / std::fabs(mean) * 100.0;
}

namespace {

struct AnchorGroup {
    double positive = 0.0;
    bool has_positive = false;
    std::vector<double> counterparts;
};

std::map<std::pair<std::string, int>, AnchorGroup> group_by_anchor(
    std::span<const ScoredPair> scored) {
    std::map<std::pair<std::string, int>, AnchorGroup> groups;
    for (const ScoredPair& sp : scored) {
        AnchorGroup& g = groups[{sp.pair.narrative_ref, sp.pair.anchor_index}];
        if (sp.pair.label == PairLabel::coherent) {
            g.positive = sp.score;
            g.has_positive = true;
        } else {
            g.counterparts.push_back(sp.score);
        }
    }
    return groups;
}

}  // namespace

AccuracyResult temporal_accuracy(std::span<const ScoredPair> scored, TemporalMode mode) {
    if (scored.empty()) throw DataError("temporal_accuracy: empty test set");
    AccuracyResult res;
    int correct = 0;
    for (const auto& [key, g] : group_by_anchor(scored)) {
        (void)key;
        if (!g.has_positive) continue;
        if (g.counterparts.empty()) {
            ++res.n_excluded;
            continue;
        }
        bool ok;
        if (mode == TemporalMode::mean_counterpart) {
            double mean = 0.0;
            for (double c : g.counterparts) mean += c;
            mean /= static_cast<double>(g.counterparts.size());
            ok = g.positive > mean;
        } else {
            ok = std::all_of(g.counterparts.begin(), g.counterparts.end(),
                             [&](double c) { return g.positive > c; });
        }
        ++res.n_counted;
        if (ok) ++correct;
    }
    if (res.n_counted == 0) throw DataError("temporal_accuracy: no anchors with counterparts");
    res.accuracy = static_cast<double>(correct) / res.n_counted;
    return res;
}

AccuracyResult entire_accuracy(std::span<const ScoredPair> scored) {
    if (scored.empty()) throw DataError("entire_accuracy: empty test set");
    struct NarrGroup {
        std::vector<double> pos, neg;
    };
    std::map<std::string, NarrGroup> groups;
    for (const ScoredPair& sp : scored) {
        NarrGroup& g = groups[sp.pair.narrative_ref];
        (sp.pair.label == PairLabel::coherent ? g.pos : g.neg).push_back(sp.score);
    }
    AccuracyResult res;
    int correct = 0;
    for (const auto& [ref, g] : groups) {
        (void)ref;
        if (g.pos.empty() || g.neg.empty()) {
            ++res.n_excluded;
            continue;
        }
        double mp = 0.0, mn = 0.0;
        for (double x : g.pos) mp += x;
        for (double x : g.neg) mn += x;
        mp /= static_cast<double>(g.pos.size());
        mn /= static_cast<double>(g.neg.size());
        ++res.n_counted;
        if (mp > mn) ++correct;
    }
    if (res.n_counted == 0)
        throw DataError("entire_accuracy: no narratives with both pair kinds");
    res.accuracy = static_cast<double>(correct) / res.n_counted;
    return res;
}

MetricsRow metrics_report(std::span<const ScoredPair> scored, std::optional<double> avg_loss) {
    if (scored.empty()) throw DataError("metrics_report: empty test set");
    MetricsRow row;
    row.scorer = scored.front().scorer;
    row.avg_loss = avg_loss;

    std::vector<double> pos, neg;
    for (const ScoredPair& sp : scored)
        (sp.pair.label == PairLabel::coherent ? pos : neg).push_back(sp.score);
    if (pos.empty() || neg.empty())
        throw DataError("metrics_report: need both coherent and incoherent scores");
    row.n_pos = static_cast<int>(pos.size());
    row.n_neg = static_cast<int>(neg.size());
    row.avg_f_pos = stats::describe(pos).mean;
    row.avg_f_neg = stats::describe(neg).mean;
    row.pct_delta_means = pct_delta(row.avg_f_pos, row.avg_f_neg);

    // grouping for the per-anchor variant is unstated in Table 2; both are kept
    double sum = 0.0;
    int counted = 0;
    for (const auto& [key, g] : group_by_anchor(scored)) {
        (void)key;
        if (!g.has_positive || g.counterparts.empty()) continue;
        double mean = 0.0;
        for (double c : g.counterparts) mean += c;
        mean /= static_cast<double>(g.counterparts.size());
        if ((g.positive + mean) / 2.0 == 0.0) continue;
        sum += pct_delta(g.positive, mean);
        ++counted;
    }
    row.pct_delta_per_anchor = counted ? sum / counted : 0.0;

    row.acc_temporal = temporal_accuracy(scored, TemporalMode::mean_counterpart).accuracy;
    row.acc_temporal_all = temporal_accuracy(scored, TemporalMode::all_counterparts).accuracy;
    row.acc_entire = entire_accuracy(scored).accuracy;

    stats::TestResult gap = stats::mann_whitney(pos, neg);
    row.gap_p_value = gap.p_value;
    row.significant = gap.p_value < 0.05;
    return row;
}

namespace {

std::string fmt(double v, int decimals) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(decimals);
    ss << v;
    return ss.str();
}

}  // namespace

std::string format_metrics_table(std::span<const MetricsRow> rows) {
    std::ostringstream out;
    out << "scorer\tavg_f_pos\tavg_f_neg\tpct_delta\tpct_delta_per_anchor\tacc_temporal\t"
           "acc_temporal_all\tacc_entire\tavg_loss\tgap_p_value\tsignificant\tn_pos\tn_neg\n";
    for (const MetricsRow& r : rows) {
        out << r.scorer << '\t' << fmt(r.avg_f_pos, 3) << '\t' << fmt(r.avg_f_neg, 3) << '\t'
            << fmt(r.pct_delta_means, 1) << '\t' << fmt(r.pct_delta_per_anchor, 1) << '\t'
            << fmt(r.acc_temporal * 100.0, 1) << '\t' << fmt(r.acc_temporal_all * 100.0, 1)
            << '\t' << fmt(r.acc_entire * 100.0, 1) << '\t'
            << (r.avg_loss ? fmt(*r.avg_loss, 3) : "-") << '\t' << fmt(r.gap_p_value, 4)
            << '\t' << (r.significant ? "yes" : "no") << '\t' << r.n_pos << '\t' << r.n_neg
            << '\n';
    }
    return out.str();
}

void write_metrics_table(std::span<const MetricsRow> rows, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write metrics table: " + path.string());
    out << format_metrics_table(rows);
}

void write_scored_pairs(std::span<const ScoredPair> scored, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write scored pairs: " + path.string());
    out << "narrative_ref\tanchor_index\tpartner_index\tlabel\tscore\tdisruptive\tscorer\n";
    out.precision(17);
    for (const ScoredPair& sp : scored) {
        out << sp.pair.narrative_ref << '\t' << sp.pair.anchor_index << '\t'
            << sp.pair.partner_index << '\t' << to_string(sp.pair.label) << '\t' << sp.score
            << '\t' << (sp.disruptive ? 1 : 0) << '\t' << sp.scorer << '\n';
    }
}

std::vector<ScoredPair> read_scored_pairs(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read scored pairs: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty scored-pair file");
    std::vector<ScoredPair> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string ref, label, score, disruptive, scorer, anchor, partner;
        if (!std::getline(ss, ref, '\t') || !std::getline(ss, anchor, '\t') ||
            !std::getline(ss, partner, '\t') || !std::getline(ss, label, '\t') ||
            !std::getline(ss, score, '\t') || !std::getline(ss, disruptive, '\t') ||
            !std::getline(ss, scorer, '\t'))
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": short row");
        ScoredPair sp;
        sp.pair.narrative_ref = ref;
        sp.pair.anchor_index = std::stoi(anchor);
        sp.pair.partner_index = std::stoi(partner);
        sp.pair.label = label == "coherent" ? PairLabel::coherent : PairLabel::incoherent;
        sp.score = std::stod(score);
        sp.disruptive = disruptive == "1";
        sp.scorer = scorer;
        out.push_back(std::move(sp));
    }
    return out;
}

}  // namespace cohmark
