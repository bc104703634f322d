#include <doctest.h>

#include <cmath>

#include "cohmark/errors.hpp"
#include "cohmark/metrics.hpp"
#include "cohmark/rng.hpp"

using namespace cohmark;

namespace {

ScoredPair sp(const std::string& ref, int i, int j, double score, bool disruptive = false) {
    ScoredPair s;
    s.pair.narrative_ref = ref;
    s.pair.anchor_index = i;
    s.pair.partner_index = j;
    s.pair.label = (j == i + 1) ? PairLabel::coherent : PairLabel::incoherent;
    s.score = score;
    s.scorer = "test";
    s.disruptive = disruptive;
    return s;
}

}  // namespace

TEST_CASE("pct_delta reproduces the reported disruptive-pair percentages") {
    CHECK(pct_delta(0.64, 0.41) == doctest::Approx(43.81).epsilon(0.01));
    CHECK(std::round(pct_delta(0.64, 0.41)) == 44.0);
    CHECK(pct_delta(0.26, 0.19) == doctest::Approx(31.11).epsilon(0.01));
    CHECK(std::round(pct_delta(0.26, 0.19)) == 31.0);
}

TEST_CASE("pct_delta identities and symmetry") {
    CHECK(pct_delta(0.37, 0.37) == 0.0);
    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
        double a = rng.uniform(0.1, 2.0);
        double b = rng.uniform(0.1, 2.0);
        CHECK(pct_delta(a, b) == doctest::Approx(pct_delta(b, a)).epsilon(1e-12));
        double c = rng.uniform(0.1, 5.0);
        CHECK(pct_delta(c * a, c * b) == doctest::Approx(pct_delta(a, b)).epsilon(1e-9));
    }
}

TEST_CASE("pct_delta rejects a zero mean") {
    CHECK_THROWS_AS(pct_delta(1.0, -1.0), NumericError);
}

TEST_CASE("temporal accuracy under dominance is perfect in both modes") {
    std::vector<ScoredPair> scored;
    for (int a = 0; a < 4; ++a) {
        scored.push_back(sp("n:1", a, a + 1, 0.9));
        scored.push_back(sp("n:1", a, a + 2, 0.2));
        scored.push_back(sp("n:1", a, a + 3, 0.1));
    }
    CHECK(temporal_accuracy(scored, TemporalMode::mean_counterpart).accuracy == 1.0);
    CHECK(temporal_accuracy(scored, TemporalMode::all_counterparts).accuracy == 1.0);
}

TEST_CASE("temporal accuracy hand-evaluated mixed anchor") {
    // anchor 0: f+ = 0.5 vs counterparts {0.4, 0.7}: mean 0.55 beats it and so
    // does the 0.7 counterpart; wrong in both modes
    std::vector<ScoredPair> scored{
        sp("n:1", 0, 1, 0.5), sp("n:1", 0, 2, 0.4), sp("n:1", 0, 3, 0.7),
        // anchor 1: f+ = 0.8 vs {0.6, 0.75}: mean 0.675, max 0.75 -> right in both
        sp("n:1", 1, 2, 0.8), sp("n:1", 1, 3, 0.6), sp("n:1", 1, 4, 0.75),
        // anchor 2: f+ = 0.7 vs {0.65, 0.72}: mean 0.685 -> right in mean mode only
        sp("n:1", 2, 3, 0.7), sp("n:1", 2, 4, 0.65), sp("n:1", 2, 5, 0.72)};
    AccuracyResult mean_mode = temporal_accuracy(scored, TemporalMode::mean_counterpart);
    AccuracyResult all_mode = temporal_accuracy(scored, TemporalMode::all_counterparts);
    CHECK(mean_mode.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(all_mode.accuracy == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("temporal accuracy excludes anchors without counterparts") {
    std::vector<ScoredPair> scored{
        sp("n:1", 0, 1, 0.9), sp("n:1", 0, 2, 0.1),  // counted
        sp("n:1", 3, 4, 0.9)                         // excluded: no counterparts
    };
    AccuracyResult r = temporal_accuracy(scored, TemporalMode::mean_counterpart);
    CHECK(r.n_counted == 1);
    CHECK(r.n_excluded == 1);
    CHECK(r.accuracy == 1.0);
}

TEST_CASE("temporal accuracy on an empty set errors") {
    CHECK_THROWS_AS(temporal_accuracy({}, TemporalMode::mean_counterpart), DataError);
}

TEST_CASE("all-counterparts accuracy never exceeds mean-counterpart accuracy") {
    Rng rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<ScoredPair> scored;
        for (int n = 0; n < 6; ++n) {
            std::string ref = "n:" + std::to_string(n);
            for (int a = 0; a < 5; ++a) {
                scored.push_back(sp(ref, a, a + 1, rng.gauss() + 0.4));
                for (int j = a + 2; j < 7; ++j) scored.push_back(sp(ref, a, j, rng.gauss()));
            }
        }
        double mean_mode = temporal_accuracy(scored, TemporalMode::mean_counterpart).accuracy;
        double all_mode = temporal_accuracy(scored, TemporalMode::all_counterparts).accuracy;
        CHECK(all_mode <= mean_mode + 1e-12);
    }
}

TEST_CASE("accuracies are invariant to constant score shifts") {
    Rng rng(41);
    std::vector<ScoredPair> scored;
    for (int a = 0; a < 6; ++a) {
        scored.push_back(sp("n:1", a, a + 1, rng.gauss() + 0.3));
        for (int j = a + 2; j < 8; ++j) scored.push_back(sp("n:1", a, j, rng.gauss()));
    }
    double t0 = temporal_accuracy(scored, TemporalMode::mean_counterpart).accuracy;
    double e0 = entire_accuracy(scored).accuracy;
    std::vector<ScoredPair> shifted = scored;
    for (ScoredPair& s : shifted) s.score += 123.456;
    CHECK(temporal_accuracy(shifted, TemporalMode::mean_counterpart).accuracy ==
          doctest::Approx(t0));
    CHECK(entire_accuracy(shifted).accuracy == doctest::Approx(e0));
}

TEST_CASE("entire accuracy on the hand-computed narrative") {
    std::vector<ScoredPair> scored{sp("n:1", 0, 1, 0.6), sp("n:1", 1, 2, 0.7),
                                   sp("n:1", 0, 2, 0.3), sp("n:1", 0, 3, 0.9)};
    // adjacent mean 0.65 > non-adjacent mean 0.6
    CHECK(entire_accuracy(scored).accuracy == 1.0);
}

TEST_CASE("entire accuracy: ties lose") {
    std::vector<ScoredPair> scored{sp("n:1", 0, 1, 0.5), sp("n:1", 0, 2, 0.5)};
    CHECK(entire_accuracy(scored).accuracy == 0.0);
}

TEST_CASE("entire accuracy excludes narratives without negatives") {
    std::vector<ScoredPair> scored{sp("n:1", 0, 1, 0.9), sp("n:1", 0, 2, 0.2),
                                   sp("n:2", 0, 1, 0.9)};
    AccuracyResult r = entire_accuracy(scored);
    CHECK(r.n_counted == 1);
    CHECK(r.n_excluded == 1);
}

TEST_CASE("metrics report columns recompute from the raw scores") {
    Rng rng(43);
    std::vector<ScoredPair> scored;
    std::vector<double> pos, neg;
    for (int n = 0; n < 5; ++n) {
        std::string ref = "n:" + std::to_string(n);
        for (int a = 0; a < 4; ++a) {
            double fp = 0.6 + 0.1 * rng.gauss();
            scored.push_back(sp(ref, a, a + 1, fp));
            pos.push_back(fp);
            for (int j = a + 2; j < 6; ++j) {
                double fn = 0.3 + 0.1 * rng.gauss();
                scored.push_back(sp(ref, a, j, fn));
                neg.push_back(fn);
            }
        }
    }
    MetricsRow row = metrics_report(scored, 0.42);

    double mp = 0.0, mn = 0.0;
    for (double x : pos) mp += x;
    for (double x : neg) mn += x;
    mp /= pos.size();
    mn /= neg.size();
    CHECK(row.avg_f_pos == doctest::Approx(mp).epsilon(1e-12));
    CHECK(row.avg_f_neg == doctest::Approx(mn).epsilon(1e-12));
    CHECK(row.pct_delta_means == doctest::Approx(pct_delta(mp, mn)).epsilon(1e-12));
    CHECK(row.n_pos == static_cast<int>(pos.size()));
    CHECK(row.n_neg == static_cast<int>(neg.size()));
    REQUIRE(row.avg_loss.has_value());
    CHECK(*row.avg_loss == 0.42);
    CHECK(row.gap_p_value ==
          doctest::Approx(stats::mann_whitney(pos, neg).p_value).epsilon(1e-12));
    CHECK(row.significant == (row.gap_p_value < 0.05));
}

TEST_CASE("identical f+ and f- distributions are not significant") {
    std::vector<ScoredPair> scored;
    for (int a = 0; a < 6; ++a) {
        scored.push_back(sp("n:1", a, a + 1, 0.5));
        scored.push_back(sp("n:1", a, a + 2, 0.5));
    }
    MetricsRow row = metrics_report(scored, std::nullopt);
    CHECK_FALSE(row.significant);
    CHECK_FALSE(row.avg_loss.has_value());
}

TEST_CASE("metrics table renders a null loss as a dash") {
    std::vector<ScoredPair> scored;
    for (int a = 0; a < 4; ++a) {
        scored.push_back(sp("n:1", a, a + 1, 0.8));
        scored.push_back(sp("n:1", a, a + 2, 0.1));
    }
    MetricsRow with_loss = metrics_report(scored, 0.123);
    MetricsRow no_loss = metrics_report(scored, std::nullopt);
    std::string table = format_metrics_table(std::vector<MetricsRow>{with_loss, no_loss});
    CHECK(table.find("0.123") != std::string::npos);
    CHECK(table.find("\t-\t") != std::string::npos);
}

TEST_CASE("score_pairs serializes backends that are unsafe to share") {
    Corpus corpus;
    Narrative n;
    n.meta.subject_id = "s";
    n.meta.visit_index = 1;
    for (int i = 0; i < 40; ++i) {
        Utterance u;
        u.index = i;
        u.words = {"word" + std::to_string(i), "filler", "tail" + std::to_string(i % 7)};
        n.utterances.push_back(std::move(u));
    }
    corpus.narratives.push_back(std::move(n));
    PairSet ps = enumerate_pairs(corpus.narratives[0]);
    std::vector<UtterancePair> all = ps.coherent;
    all.insert(all.end(), ps.incoherent.begin(), ps.incoherent.end());

    ScorerConfig parallel_cfg;
    parallel_cfg.family = ScorerFamily::similarity_baseline;
    parallel_cfg.backend = "hash:dim=24,salt=3";
    ScorerConfig serial_cfg = parallel_cfg;
    serial_cfg.backend = "hash:dim=24,salt=3,serial=1";

    Scorer par = Scorer::untrained(parallel_cfg);
    Scorer ser = Scorer::untrained(serial_cfg);
    CHECK(par.concurrent_safe());
    CHECK_FALSE(ser.concurrent_safe());
    std::vector<ScoredPair> a = score_pairs(corpus, all, par);
    std::vector<ScoredPair> b = score_pairs(corpus, all, ser);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].score == b[i].score);
}

TEST_CASE("scored pairs round-trip through the tsv file") {
    std::vector<ScoredPair> scored{sp("n:1", 0, 1, 0.123456789012345, true),
                                   sp("n:1", 0, 2, -3.5)};
    auto path = std::filesystem::temp_directory_path() / "cohmark_scored_test.tsv";
    write_scored_pairs(scored, path);
    std::vector<ScoredPair> back = read_scored_pairs(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].score == scored[0].score);
    CHECK(back[0].disruptive);
    CHECK(back[1].pair.label == PairLabel::incoherent);
    std::filesystem::remove(path);
}
