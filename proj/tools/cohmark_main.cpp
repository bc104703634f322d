// cohmark: coherence scoring of transcribed narratives and the longitudinal
// digital marker built from it. Subcommands run the pipeline stages:
//   ingest -> pairs -> train -> evaluate -> marker -> associate -> report

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cohmark/config.hpp"
#include "cohmark/errors.hpp"
#include "cohmark/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cohmark;

namespace {

ScorerConfig scorer_config_from(const Config& cfg, const std::string& family) {
    ScorerConfig c;
    c.family = family_from_string(family);
    c.backend = cfg.get_or("model", "backend", c.backend);
    c.margin = cfg.get_double("model", "margin", c.margin);
    c.hidden = cfg.get_int("model", "hidden", c.hidden);
    c.cnn_filters = cfg.get_int("model", "cnn_filters", c.cnn_filters);
    c.cnn_width = cfg.get_int("model", "cnn_width", c.cnn_width);
    c.learning_rate = cfg.get_double("train", "learning_rate", c.learning_rate);
    c.batch_size = cfg.get_int("train", "batch_size", c.batch_size);
    c.optimizer = cfg.get_or("train", "optimizer", c.optimizer);
    c.weight_decay = cfg.get_double("train", "weight_decay", c.weight_decay);
    c.max_epochs = cfg.get_int("train", "max_epochs", c.max_epochs);
    c.patience = cfg.get_int("train", "patience", c.patience);
    c.runs = cfg.get_int("train", "runs", c.runs);
    c.negatives_per_positive =
        cfg.get_int("train", "negatives_per_positive", c.negatives_per_positive);
    c.ppl_floor = cfg.get_double("model", "ppl_floor", c.ppl_floor);
    std::string dir = cfg.get_or("model", "direction", "forward");
    if (dir == "backward")
        c.direction = Direction::backward;
    else if (dir == "mean")
        c.direction = Direction::mean;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"digital language-coherence marker pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "run";
    std::uint64_t seed = 1;
    app.add_option("--config", config_path, "INI config file")->envname("COHMARK_CONFIG");
    app.add_option("--out", out_dir, "run directory for artifacts");
    app.add_option("--seed", seed, "global seed");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse a directory of transcripts");
    pipeline::IngestOptions in_opts;
    std::string meta_path;
    ingest->add_option("--root", in_opts.root, "transcript directory")->required();
    ingest->add_option("--meta", meta_path, "metadata table (subject_id, visit_index, ...)");
    ingest->add_option("--speakers", in_opts.speakers, "subject speaker codes");
    ingest->add_flag("--all-speakers", in_opts.keep_all_speakers,
                     "keep every speaker's utterances");

    // pairs
    auto* pairs = app.add_subcommand("pairs", "split subjects and export pair files");
    pipeline::PairsOptions pr_opts;
    std::vector<double> ratios{0.8, 0.1, 0.1};
    pairs->add_option("--corpus", pr_opts.corpus, "corpus.json from ingest")->required();
    pairs->add_option("--ratios", ratios, "train/validation/test ratios")->expected(3);

    // train
    auto* train = app.add_subcommand("train", "grid search and seeded training runs");
    pipeline::TrainOptions tr_opts;
    std::string family = "discriminative";
    std::string backend_flag;
    double margin_flag = -1.0;
    double lr_flag = -1.0;
    train->add_option("--corpus", tr_opts.corpus, "corpus.json")->required();
    train->add_option("--split", tr_opts.split, "split.json from pairs")->required();
    train->add_option("--family", family,
                      "classifier|cnn|discriminative|generative|similarity_baseline");
    train->add_option("--backend", backend_flag, "backend spec, e.g. hash:dim=64");
    train->add_option("--margin", margin_flag, "margin for the discriminative family");
    train->add_option("--lr", lr_flag, "learning rate override");
    int grid_trials = -1;  // -1: config [grid] trials or the default of 20
    train->add_option("--grid-trials", grid_trials, "grid-search trials (0 = skip)");
    train->add_flag("--finetune", tr_opts.finetune,
                    "fine-tune the generative family instead of zero-shot");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a split with a checkpoint");
    pipeline::EvaluateOptions ev_opts;
    std::string ev_family = "similarity_baseline";
    std::string ev_split = "test";
    evaluate->add_option("--corpus", ev_opts.corpus, "corpus.json")->required();
    evaluate->add_option("--split", ev_opts.split, "split.json")->required();
    evaluate->add_option("--checkpoint", ev_opts.checkpoint, "trained checkpoint");
    evaluate->add_option("--family", ev_family, "untrained family when no checkpoint given");
    evaluate->add_option("--eval-split", ev_split, "train|validation|test");

    // marker
    auto* marker = app.add_subcommand("marker", "longitudinal marker series and cohort table");
    pipeline::MarkerOptions mk_opts;
    std::string mk_family = "similarity_baseline";
    marker->add_option("--corpus", mk_opts.corpus, "corpus.json")->required();
    marker->add_option("--checkpoint", mk_opts.checkpoint, "trained checkpoint");
    marker->add_option("--family", mk_family, "untrained family when no checkpoint given");

    // associate
    auto* associate = app.add_subcommand("associate", "biomarker-bin association tables");
    pipeline::AssociateOptions as_opts;
    associate->add_option("--corpus", as_opts.corpus, "corpus.json")->required();
    associate->add_option("--markers", as_opts.markers, "marker_table.tsv")->required();

    // report
    auto* report = app.add_subcommand("report", "tables and plots for a finished run");
    std::string report_run;
    report->add_option("--run", report_run, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg;
        if (!config_path.empty()) cfg = Config::parse_file(config_path);
        fs::path run_dir = out_dir;

        if (*ingest) {
            if (!meta_path.empty()) in_opts.metadata = fs::path(meta_path);
            pipeline::cmd_ingest(in_opts, cfg, run_dir);
        } else if (*pairs) {
            pr_opts.ratios = {ratios[0], ratios[1], ratios[2]};
            pr_opts.seed = seed;
            pipeline::cmd_pairs(pr_opts, cfg, run_dir);
        } else if (*train) {
            // explicit hyper flags pin the value and narrow the search pool
            if (margin_flag > 0.0) cfg.set("grid", "margins", std::to_string(margin_flag));
            if (lr_flag > 0.0) cfg.set("grid", "learning_rates", std::to_string(lr_flag));
            tr_opts.config = scorer_config_from(cfg, family);
            if (!backend_flag.empty()) tr_opts.config.backend = backend_flag;
            if (margin_flag > 0.0) tr_opts.config.margin = margin_flag;
            if (lr_flag > 0.0) tr_opts.config.learning_rate = lr_flag;
            tr_opts.grid_trials =
                grid_trials >= 0 ? grid_trials : cfg.get_int("grid", "trials", 20);
            tr_opts.seed = seed;
            pipeline::cmd_train(tr_opts, cfg, run_dir);
        } else if (*evaluate) {
            ev_opts.untrained_config = scorer_config_from(cfg, ev_family);
            ev_opts.eval_split = split_from_string(ev_split);
            pipeline::cmd_evaluate(ev_opts, cfg, run_dir);
        } else if (*marker) {
            mk_opts.use_untrained = mk_opts.checkpoint.empty();
            mk_opts.untrained_config = scorer_config_from(cfg, mk_family);
            pipeline::cmd_marker(mk_opts, cfg, run_dir);
        } else if (*associate) {
            pipeline::cmd_associate(as_opts, cfg, run_dir);
        } else if (*report) {
            pipeline::cmd_report(report_run);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
