#include "cohmark/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "cohmark/biomarker.hpp"
#include "cohmark/errors.hpp"
#include "cohmark/marker.hpp"
#include "cohmark/metrics.hpp"
#include "cohmark/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cohmark::pipeline {

std::uint64_t file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash missing file: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << v;
    return ss.str();
}

std::string now_iso() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

}  // namespace

void RunManifest::add_input(const fs::path& path) {
    input_hashes[path.string()] = hex64(file_hash(path));
}

void RunManifest::add_artifact(const std::string& relative) {
    if (std::find(artifacts.begin(), artifacts.end(), relative) == artifacts.end())
        artifacts.push_back(relative);
}

void RunManifest::save(const fs::path& run_dir) const {
    json j;
    j["run_id"] = run_id;
    j["config"] = config_snapshot;
    j["input_hashes"] = input_hashes;
    j["artifacts"] = artifacts;
    j["created_at"] = created_at;
    std::ofstream out(run_dir / "manifest.json");
    if (!out) throw DataError("cannot write manifest in " + run_dir.string());
    out << j.dump(1, '\t') << "\n";
}

RunManifest RunManifest::load_or_create(const fs::path& run_dir) {
    fs::create_directories(run_dir);
    fs::path p = run_dir / "manifest.json";
    RunManifest m;
    if (fs::exists(p)) {
        std::ifstream in(p);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ParseError(p.string() + ": " + e.what());
        }
        m.run_id = j.value("run_id", run_dir.filename().string());
        m.config_snapshot = j.value("config", json::object());
        m.input_hashes = j.value("input_hashes", json::object());
        m.artifacts = j.value("artifacts", std::vector<std::string>{});
        m.created_at = j.value("created_at", now_iso());
        return m;
    }
    m.run_id = run_dir.filename().string();
    m.created_at = now_iso();
    return m;
}

std::vector<const Narrative*> narratives_for_split(const Corpus& corpus,
                                                   const SplitManifest& manifest, Split split) {
    std::vector<const Narrative*> out;
    for (const Narrative& n : corpus.narratives) {
        auto it = manifest.assignment.find(n.meta.subject_id);
        if (it != manifest.assignment.end() && it->second == split) out.push_back(&n);
    }
    return out;
}

// ---------------------------------------------------------------------- ingest

void cmd_ingest(const IngestOptions& opts, const Config& config, const fs::path& run_dir) {
    RunManifest manifest = RunManifest::load_or_create(run_dir);
    manifest.config_snapshot = config.snapshot();

    ParseOptions popts;
    popts.subject_speakers = opts.speakers;
    popts.keep_all_speakers = opts.keep_all_speakers;
    IngestStats stats;
    Corpus corpus = load_cohort(opts.root, opts.metadata, popts, &stats);

    save_corpus(corpus, run_dir / "corpus.json");
    manifest.add_artifact("corpus.json");

    std::ofstream rep(run_dir / "ingest_report.txt");
    if (!rep) throw DataError("cannot write ingest report");
    auto by_dx = corpus.by_diagnosis();
    rep << "narratives\t" << corpus.narratives.size() << "\n";
    rep << "subjects\t" << corpus.subject_count() << "\n";
    rep << "utterances_kept\t" << stats.utterances_kept << "\n";
    rep << "utterances_dropped_empty\t" << stats.utterances_dropped_empty << "\n";
    rep << "non_subject_lines\t" << stats.non_subject_lines << "\n";
    rep << "exclusion_codes\t" << stats.exclusion_codes << "\n";
    for (const auto& [dx, narrs] : by_dx) {
        std::set<std::string> subjects;
        for (const Narrative* n : narrs) subjects.insert(n->meta.subject_id);
        rep << "cohort_" << to_string(dx) << "\t" << subjects.size() << " subjects, "
            << narrs.size() << " narratives\n";
    }
    rep << "errors\t0\n";
    for (const std::string& w : stats.warnings) rep << "warning\t" << w << "\n";
    manifest.add_artifact("ingest_report.txt");
    manifest.save(run_dir);
}

// ----------------------------------------------------------------------- pairs

void cmd_pairs(const PairsOptions& opts, const Config& config, const fs::path& run_dir) {
    RunManifest manifest = RunManifest::load_or_create(run_dir);
    if (manifest.config_snapshot.empty()) manifest.config_snapshot = config.snapshot();
    manifest.add_input(opts.corpus);

    Corpus corpus = load_corpus_file(opts.corpus);
    SplitManifest split = split_by_subject(corpus, opts.ratios, opts.seed);
    split.save(run_dir / "split.json");
    manifest.add_artifact("split.json");

    std::ofstream rep(run_dir / "pairs_report.txt");
    rep << "split\tsubjects\tnarratives\tcoherent\tincoherent\n";
    for (Split s : {Split::train, Split::validation, Split::test}) {
        std::vector<const Narrative*> narrs = narratives_for_split(corpus, split, s);
        std::vector<UtterancePair> all;
        std::size_t n_coh = 0, n_inc = 0;
        for (const Narrative* n : narrs) {
            if (n->utterances.size() < 2) continue;
            PairSet ps = enumerate_pairs(*n);
            n_coh += ps.coherent.size();
            n_inc += ps.incoherent.size();
            all.insert(all.end(), ps.coherent.begin(), ps.coherent.end());
            all.insert(all.end(), ps.incoherent.begin(), ps.incoherent.end());
        }
        std::string name = "pairs_" + to_string(s) + ".tsv";
        export_pairs(corpus, all, run_dir / name);
        manifest.add_artifact(name);
        std::set<std::string> subjects;
        for (const Narrative* n : narrs) subjects.insert(n->meta.subject_id);
        rep << to_string(s) << '\t' << subjects.size() << '\t' << narrs.size() << '\t'
            << n_coh << '\t' << n_inc << '\n';
    }
    manifest.add_artifact("pairs_report.txt");
    manifest.save(run_dir);
}

// ----------------------------------------------------------------------- train

namespace {

MetricsRow evaluate_on(const Corpus& corpus, const std::vector<const Narrative*>& narrs,
                       const Scorer& scorer, std::optional<double> avg_loss) {
    std::vector<UtterancePair> all;
    for (const Narrative* n : narrs) {
        if (n->utterances.size() < 2) continue;
        PairSet ps = enumerate_pairs(*n);
        all.insert(all.end(), ps.coherent.begin(), ps.coherent.end());
        all.insert(all.end(), ps.incoherent.begin(), ps.incoherent.end());
    }
    if (all.empty()) throw DataError("evaluation split has no pairs");
    std::vector<ScoredPair> scored = score_pairs(corpus, all, scorer);
    return metrics_report(scored, avg_loss);
}

MetricsRow average_rows(const std::vector<MetricsRow>& rows) {
    MetricsRow avg = rows.front();
    auto mean_of = [&](auto get) {
        double s = 0.0;
        for (const MetricsRow& r : rows) s += get(r);
        return s / static_cast<double>(rows.size());
    };
    avg.avg_f_pos = mean_of([](const MetricsRow& r) { return r.avg_f_pos; });
    avg.avg_f_neg = mean_of([](const MetricsRow& r) { return r.avg_f_neg; });
    avg.pct_delta_means = mean_of([](const MetricsRow& r) { return r.pct_delta_means; });
    avg.pct_delta_per_anchor =
        mean_of([](const MetricsRow& r) { return r.pct_delta_per_anchor; });
    avg.acc_temporal = mean_of([](const MetricsRow& r) { return r.acc_temporal; });
    avg.acc_temporal_all = mean_of([](const MetricsRow& r) { return r.acc_temporal_all; });
    avg.acc_entire = mean_of([](const MetricsRow& r) { return r.acc_entire; });
    bool any_loss = false;
    double loss_sum = 0.0;
    for (const MetricsRow& r : rows)
        if (r.avg_loss) {
            any_loss = true;
            loss_sum += *r.avg_loss;
        }
    avg.avg_loss = any_loss ? std::optional<double>(loss_sum / rows.size()) : std::nullopt;
    // conservative: the gap is significant only if it is in every run
    double worst_p = 0.0;
    for (const MetricsRow& r : rows) worst_p = std::max(worst_p, r.gap_p_value);
    avg.gap_p_value = worst_p;
    avg.significant = worst_p < 0.05;
    return avg;
}

ParamPool pool_from_config(const Config& config) {
    ParamPool pool;
    auto parse_list = [](const std::string& text, auto parse_one, auto& out) {
        out.clear();
        std::istringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_one(item));
    };
    if (auto v = config.get("grid", "learning_rates"))
        parse_list(*v, [](const std::string& s) { return std::stod(s); },
                   pool.learning_rates);
    if (auto v = config.get("grid", "batch_sizes"))
        parse_list(*v, [](const std::string& s) { return std::stoi(s); }, pool.batch_sizes);
    if (auto v = config.get("grid", "optimizers"))
        parse_list(*v, [](const std::string& s) { return s; }, pool.optimizers);
    if (auto v = config.get("grid", "margins"))
        parse_list(*v, [](const std::string& s) { return std::stod(s); }, pool.margins);
    return pool;
}

}  // namespace

void cmd_train(const TrainOptions& opts, const Config& config, const fs::path& run_dir) {
    RunManifest manifest = RunManifest::load_or_create(run_dir);
    if (manifest.config_snapshot.empty()) manifest.config_snapshot = config.snapshot();
    manifest.add_input(opts.corpus);
    manifest.add_input(opts.split);

    Corpus corpus = load_corpus_file(opts.corpus);
    SplitManifest split = SplitManifest::load(opts.split);
    std::vector<const Narrative*> train = narratives_for_split(corpus, split, Split::train);
    std::vector<const Narrative*> val = narratives_for_split(corpus, split, Split::validation);
    std::vector<const Narrative*> test = narratives_for_split(corpus, split, Split::test);

    ScorerConfig base = opts.config;
    base.validate();

    const bool trainable = base.family == ScorerFamily::classifier ||
                           base.family == ScorerFamily::cnn ||
                           base.family == ScorerFamily::discriminative ||
                           (base.family == ScorerFamily::generative && opts.finetune);

    std::vector<MetricsRow> run_rows;
    if (!trainable) {
        // zero-shot generative / similarity baseline: nothing to fit
        Scorer scorer = Scorer::untrained(base);
        Checkpoint c;
        c.config = base;
        c.parameters = json::object();
        c.save(run_dir / "checkpoint_run0.json");
        manifest.add_artifact("checkpoint_run0.json");
        run_rows.push_back(evaluate_on(corpus, test, scorer, std::nullopt));
    } else {
        if (opts.grid_trials > 0) {
            GridResult grid = grid_search(base, pool_from_config(config), train, val,
                                          opts.seed, opts.grid_trials);
            write_trials_log(grid.trials, run_dir / "trials.tsv");
            manifest.add_artifact("trials.tsv");
            base = grid.best;
        }
        for (int r = 0; r < base.runs; ++r) {
            std::uint64_t run_seed = opts.seed + static_cast<std::uint64_t>(r);
            TrainResult res = train_scorer(base, train, val, run_seed);
            std::string name = "checkpoint_run" + std::to_string(r) + ".json";
            res.best.save(run_dir / name);
            manifest.add_artifact(name);

            std::string log_name = "epochs_run" + std::to_string(r) + ".tsv";
            std::ofstream log(run_dir / log_name);
            log << "epoch\ttrain_loss\tvalidation_loss\n";
            log.precision(10);
            for (const EpochLog& e : res.history)
                log << e.epoch << '\t' << e.train_loss << '\t' << e.validation_loss << '\n';
            manifest.add_artifact(log_name);

            Scorer scorer = Scorer::from_checkpoint(res.best);
            run_rows.push_back(evaluate_on(corpus, test, scorer, res.best.validation_loss));
        }
    }

    write_metrics_table(std::vector<MetricsRow>{run_rows}, run_dir / "metrics_runs.tsv");
    MetricsRow avg = run_rows.size() == 1 ? run_rows.front() : average_rows(run_rows);
    write_metrics_table(std::vector<MetricsRow>{avg}, run_dir / "metrics.tsv");
    manifest.add_artifact("metrics_runs.tsv");
    manifest.add_artifact("metrics.tsv");
    manifest.save(run_dir);
}

// -------------------------------------------------------------------- evaluate

void cmd_evaluate(const EvaluateOptions& opts, const Config& config, const fs::path& run_dir) {
    RunManifest manifest = RunManifest::load_or_create(run_dir);
    if (manifest.config_snapshot.empty()) manifest.config_snapshot = config.snapshot();
    manifest.add_input(opts.corpus);
    manifest.add_input(opts.split);

    Corpus corpus = load_corpus_file(opts.corpus);
    SplitManifest split = SplitManifest::load(opts.split);
    std::vector<const Narrative*> narrs = narratives_for_split(corpus, split, opts.eval_split);

    Scorer scorer = opts.checkpoint.empty()
                        ? Scorer::untrained(opts.untrained_config)
                        : Scorer::from_checkpoint(Checkpoint::load(opts.checkpoint));
    if (!opts.checkpoint.empty()) manifest.add_input(opts.checkpoint);

    std::vector<UtterancePair> all;
    for (const Narrative* n : narrs) {
        if (n->utterances.size() < 2) continue;
        PairSet ps = enumerate_pairs(*n);
        all.insert(all.end(), ps.coherent.begin(), ps.coherent.end());
        all.insert(all.end(), ps.incoherent.begin(), ps.incoherent.end());
    }
    if (all.empty()) throw DataError("evaluate: split has no pairs");
    std::vector<ScoredPair> scored = score_pairs(corpus, all, scorer);
    write_scored_pairs(scored, run_dir / "scored_test.tsv");
    manifest.add_artifact("scored_test.tsv");

    MetricsRow row = metrics_report(scored, std::nullopt);
    write_metrics_table(std::vector<MetricsRow>{row}, run_dir / "metrics.tsv");
    manifest.add_artifact("metrics.tsv");
    manifest.save(run_dir);
}

// ---------------------------------------------------------------------- marker

void cmd_marker(const MarkerOptions& opts, const Config& config, const fs::path& run_dir) {
    RunManifest manifest = RunManifest::load_or_create(run_dir);
    if (manifest.config_snapshot.empty()) manifest.config_snapshot = config.snapshot();
    manifest.add_input(opts.corpus);

    Corpus corpus = load_corpus_file(opts.corpus);
    Scorer scorer = opts.use_untrained
                        ? Scorer::untrained(opts.untrained_config)
                        : Scorer::from_checkpoint(Checkpoint::load(opts.checkpoint));
    if (!opts.use_untrained) manifest.add_input(opts.checkpoint);

    SeriesResult series = subject_series(corpus, scorer);
    write_marker_table(series.series, run_dir / "marker_table.tsv");
    manifest.add_artifact("marker_table.tsv");

    std::ofstream excl(run_dir / "marker_exclusions.txt");
    for (const std::string& s : series.excluded_subjects) excl << s << "\n";
    manifest.add_artifact("marker_exclusions.txt");

    std::string pooling = config.get_or("marker", "delta_long_pooling", "per_subject_mean");
    CohortTable table = cohort_table(series.series,
                                     pooling == "pooled_diffs" ? LongPooling::pooled_diffs
                                                               : LongPooling::per_subject_mean);
    write_cohort_table(table, run_dir / "cohort_summary.tsv");
    manifest.add_artifact("cohort_summary.tsv");

    // disruptive-utterance analysis over the AD cohort's adjacent pairs
    std::vector<UtterancePair> ad_adjacent;
    for (const Narrative& n : corpus.narratives) {
        if (n.meta.diagnosis != Diagnosis::ad || n.utterances.size() < 2) continue;
        PairSet ps = enumerate_pairs(n);
        ad_adjacent.insert(ad_adjacent.end(), ps.coherent.begin(), ps.coherent.end());
    }
    std::ofstream dis(run_dir / "disruptive.tsv");
    dis << "group\tn\tmean\tstd\n";
    if (!ad_adjacent.empty()) {
        std::vector<ScoredPair> scored = score_pairs(corpus, ad_adjacent, scorer);
        DisruptiveReport rep = disruptive_analysis(scored);
        dis.setf(std::ios::fixed);
        dis.precision(3);
        if (rep.disruptive)
            dis << "disruptive\t" << rep.disruptive->n << '\t' << rep.disruptive->mean << '\t'
                << rep.disruptive->stddev << '\n';
        else
            dis << "disruptive\t0\t-\t-\n";
        if (rep.non_disruptive)
            dis << "non_disruptive\t" << rep.non_disruptive->n << '\t'
                << rep.non_disruptive->mean << '\t' << rep.non_disruptive->stddev << '\n';
        else
            dis << "non_disruptive\t0\t-\t-\n";
        dis << "# fraction_disruptive\t" << rep.fraction_disruptive << '\n';
        if (rep.pct_delta) dis << "# pct_delta\t" << *rep.pct_delta << '\n';
        if (rep.t) dis << "# t_test_p\t" << rep.t->p_value << '\n';
    } else {
        dis << "# no AD-cohort adjacent pairs\n";
    }
    manifest.add_artifact("disruptive.tsv");
    manifest.save(run_dir);
}

// ------------------------------------------------------------------- associate

void cmd_associate(const AssociateOptions& opts, const Config& config,
                   const fs::path& run_dir) {
    RunManifest manifest = RunManifest::load_or_create(run_dir);
    if (manifest.config_snapshot.empty()) manifest.config_snapshot = config.snapshot();
    manifest.add_input(opts.corpus);
    manifest.add_input(opts.markers);

    Corpus corpus = load_corpus_file(opts.corpus);
    std::vector<MarkerSeries> all = read_marker_table(opts.markers);
    std::vector<MarkerSeries> series;
    for (MarkerSeries& s : all)
        if (s.visits.size() >= 2) series.push_back(std::move(s));

    for (BiomarkerKind kind :
         {BiomarkerKind::mmse_delta, BiomarkerKind::cdr_delta, BiomarkerKind::hdr_last}) {
        std::string name = "assoc_" + to_string(kind) + ".tsv";
        BinSpec spec = bins_from_config(config, kind);
        AssociationTable table = association_table(corpus, series, spec);
        bool any = false;
        for (const AssociationRow& r : table.rows) any = any || r.n_subjects > 0;
        if (!any) {
            std::ofstream out(run_dir / name);
            out << "# biomarker: " << to_string(kind) << "\n# insufficient data\n";
        } else {
            write_association_table(table, run_dir / name);
        }
        manifest.add_artifact(name);
    }
    manifest.save(run_dir);
}

// ---------------------------------------------------------------------- report

namespace {

// one polyline per subject, visits on x, marker on y
void write_cohort_plot(const std::vector<MarkerSeries>& series, Diagnosis dx,
                       const fs::path& path) {
    std::vector<const MarkerSeries*> rows;
    int min_v = 1, max_v = 1;
    double min_m = 0.0, max_m = 1.0;
    bool first = true;
    for (const MarkerSeries& s : series) {
        if (s.diagnosis != dx) continue;
        rows.push_back(&s);
        for (const MarkerPoint& p : s.visits) {
            if (first) {
                min_v = max_v = p.visit_index;
                min_m = max_m = p.value;
                first = false;
            }
            min_v = std::min(min_v, p.visit_index);
            max_v = std::max(max_v, p.visit_index);
            min_m = std::min(min_m, p.value);
            max_m = std::max(max_m, p.value);
        }
    }
    std::sort(rows.begin(), rows.end(), [](const MarkerSeries* a, const MarkerSeries* b) {
        return a->subject_id < b->subject_id;
    });
    if (max_v == min_v) max_v = min_v + 1;
    if (max_m - min_m < 1e-9) max_m = min_m + 1.0;

    const double W = 640, H = 400, L = 60, B = 40, T = 20, R = 20;
    auto sx = [&](double v) { return L + (v - min_v) / (max_v - min_v) * (W - L - R); };
    auto sy = [&](double m) { return H - B - (m - min_m) / (max_m - min_m) * (H - B - T); };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write plot: " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << (H - B)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << (H - B) << "\" x2=\"" << (W - R) << "\" y2=\""
        << (H - B) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (W / 2) << "\" y=\"" << (H - 8)
        << "\" font-size=\"12\" text-anchor=\"middle\">visit</text>\n";
    out << "<text x=\"14\" y=\"" << (H / 2)
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << (H / 2)
        << ")\">coherence marker</text>\n";
    out << "<text x=\"" << (W / 2) << "\" y=\"14\" font-size=\"13\" text-anchor=\"middle\">"
        << to_string(dx) << " cohort (" << rows.size() << " subjects)</text>\n";
    out.setf(std::ios::fixed);
    out.precision(2);
    int color = 0;
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    for (const MarkerSeries* s : rows) {
        out << "<polyline fill=\"none\" stroke=\"" << palette[color++ % 8]
            << "\" stroke-width=\"1.5\" points=\"";
        for (const MarkerPoint& p : s->visits)
            out << sx(p.visit_index) << ',' << sy(p.value) << ' ';
        out << "\"/>\n";
        for (const MarkerPoint& p : s->visits)
            out << "<circle cx=\"" << sx(p.visit_index) << "\" cy=\"" << sy(p.value)
                << "\" r=\"2.5\" fill=\"" << palette[(color - 1) % 8] << "\"/>\n";
    }
    out << "</svg>\n";
}

void copy_if_exists(const fs::path& from, const fs::path& to, RunManifest& manifest,
                    const std::string& rel) {
    if (!fs::exists(from)) return;
    fs::copy_file(from, to, fs::copy_options::overwrite_existing);
    manifest.add_artifact(rel);
}

}  // namespace

void cmd_report(const fs::path& run_dir) {
    if (!fs::exists(run_dir / "manifest.json"))
        throw DataError("unknown run: no manifest in " + run_dir.string());
    RunManifest manifest = RunManifest::load_or_create(run_dir);
    fs::path rep = run_dir / "report";
    fs::create_directories(rep);

    copy_if_exists(run_dir / "metrics.tsv", rep / "metrics.tsv", manifest,
                   "report/metrics.tsv");
    copy_if_exists(run_dir / "cohort_summary.tsv", rep / "cohort_summary.tsv", manifest,
                   "report/cohort_summary.tsv");
    for (const char* kind : {"mmse_delta", "cdr_delta", "hdr_last"}) {
        std::string name = std::string("assoc_") + kind + ".tsv";
        fs::path src = run_dir / name;
        if (!fs::exists(src)) {
            std::ofstream stub(rep / name);
            stub << "# biomarker: " << kind << "\n# insufficient data\n";
            manifest.add_artifact("report/" + name);
        } else {
            copy_if_exists(src, rep / name, manifest, "report/" + name);
        }
    }

    json summary = json::object();
    if (fs::exists(run_dir / "metrics.tsv")) {
        std::ifstream in(run_dir / "metrics.tsv");
        std::string header, line;
        std::getline(in, header);
        std::vector<std::string> cols;
        std::istringstream hs(header);
        std::string c;
        while (std::getline(hs, c, '\t')) cols.push_back(c);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            json row = json::object();
            std::string cell;
            std::size_t i = 0;
            std::string scorer = "scorer";
            while (std::getline(ls, cell, '\t') && i < cols.size()) {
                row[cols[i]] = cell;
                if (cols[i] == "scorer") scorer = cell;
                ++i;
            }
            summary[scorer] = row;
        }
    }

    if (fs::exists(run_dir / "marker_table.tsv")) {
        std::vector<MarkerSeries> series = read_marker_table(run_dir / "marker_table.tsv");
        std::set<Diagnosis> cohorts;
        for (const MarkerSeries& s : series) cohorts.insert(s.diagnosis);
        for (Diagnosis dx : cohorts) {
            std::string name = "plot_" + to_string(dx) + ".svg";
            write_cohort_plot(series, dx, rep / name);
            manifest.add_artifact("report/" + name);
        }
        summary["cohorts"] = json::array();
        for (Diagnosis dx : cohorts) summary["cohorts"].push_back(to_string(dx));
    }

    std::ofstream sj(rep / "summary.json");
    sj << summary.dump(1, '\t') << "\n";
    manifest.add_artifact("report/summary.json");
    manifest.save(run_dir);
}

}  // namespace cohmark::pipeline
