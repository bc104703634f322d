#include <doctest.h>

#include <cmath>

#include "cohmark/errors.hpp"
#include "cohmark/marker.hpp"
#include "cohmark/rng.hpp"
#include "support/synthetic.hpp"

using namespace cohmark;

namespace {

MarkerSeries series_of(const std::string& subject, Diagnosis dx,
                       const std::vector<double>& values) {
    MarkerSeries s;
    s.subject_id = subject;
    s.diagnosis = dx;
    for (std::size_t i = 0; i < values.size(); ++i)
        s.visits.push_back({static_cast<int>(i + 1), values[i]});
    return s;
}

ScoredPair adj(const std::string& ref, int a, double score, bool disruptive = false) {
    ScoredPair s;
    s.pair.narrative_ref = ref;
    s.pair.anchor_index = a;
    s.pair.partner_index = a + 1;
    s.pair.label = PairLabel::coherent;
    s.score = score;
    s.scorer = "test";
    s.disruptive = disruptive;
    return s;
}

}  // namespace

TEST_CASE("narrative marker is the mean of adjacent scores") {
    std::vector<double> scores{0.6, 0.7, 0.5};
    CHECK(narrative_marker(scores) == doctest::Approx(0.6));
    std::vector<double> one{0.42};
    CHECK(narrative_marker(one) == doctest::Approx(0.42));
    CHECK_THROWS_AS(narrative_marker(std::vector<double>{}), DataError);
}

TEST_CASE("narrative marker is permutation invariant") {
    Rng rng(3);
    std::vector<double> scores;
    for (int i = 0; i < 9; ++i) scores.push_back(rng.gauss());
    double base = narrative_marker(scores);
    for (int trial = 0; trial < 5; ++trial) {
        rng.shuffle(scores);
        CHECK(narrative_marker(scores) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("delta fixtures") {
    CHECK(delta_end_start(series_of("s", Diagnosis::healthy, {0.5, 0.6})) ==
          doctest::Approx(0.1));
    CHECK(delta_end_start(series_of("s", Diagnosis::healthy, {0.4, 0.4, 0.4})) == 0.0);
    CHECK(delta_long(series_of("s", Diagnosis::healthy, {0.5, 0.6, 0.4})) ==
          doctest::Approx(-0.05));
    MarkerSeries one = series_of("s", Diagnosis::healthy, {0.7});
    CHECK_THROWS_AS(delta_end_start(one), DataError);
    CHECK_THROWS_AS(delta_long(one), DataError);
}

TEST_CASE("two-visit series: delta_long equals delta_end_start exactly") {
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        MarkerSeries s = series_of("s", Diagnosis::mci, {rng.gauss(), rng.gauss()});
        CHECK(delta_long(s) == delta_end_start(s));
    }
}

TEST_CASE("constant shift moves markers and leaves deltas unchanged") {
    Rng rng(7);
    std::vector<double> values;
    for (int i = 0; i < 5; ++i) values.push_back(rng.gauss());
    MarkerSeries s = series_of("s", Diagnosis::ad, values);
    double des = delta_end_start(s);
    double dl = delta_long(s);
    std::vector<double> shifted = values;
    for (double& v : shifted) v += 17.5;
    MarkerSeries s2 = series_of("s", Diagnosis::ad, shifted);
    CHECK(std::fabs(delta_end_start(s2) - des) < 1e-12);
    CHECK(std::fabs(delta_long(s2) - dl) < 1e-12);
}

TEST_CASE("subject series keeps multi-visit subjects in visit order") {
    synth::Options opts;
    opts.narratives = 6;
    opts.visits_per_subject = 3;
    opts.seed = 11;
    Corpus corpus = synth::synthetic_corpus(opts);
    // one extra single-visit subject that must be excluded
    Rng rng(12);
    corpus.narratives.push_back(
        synth::synthetic_narrative("loner", 1, 6, Diagnosis::healthy, 0.0, rng));

    ScorerConfig cfg;
    cfg.family = ScorerFamily::similarity_baseline;
    cfg.backend = "hash:dim=32";
    SeriesResult r = subject_series(corpus, Scorer::untrained(cfg));
    CHECK(r.series.size() == 6);
    CHECK(r.excluded_subjects == std::vector<std::string>{"loner"});
    for (const MarkerSeries& s : r.series) {
        REQUIRE(s.visits.size() == 3);
        CHECK(s.visits[0].visit_index < s.visits[1].visit_index);
        CHECK(s.visits[1].visit_index < s.visits[2].visit_index);
    }
}

TEST_CASE("subject series with sparse visits keeps visit indices") {
    Corpus corpus;
    Rng rng(13);
    corpus.narratives.push_back(
        synth::synthetic_narrative("s1", 1, 6, Diagnosis::healthy, 0.0, rng));
    corpus.narratives.push_back(
        synth::synthetic_narrative("s1", 3, 6, Diagnosis::healthy, 0.0, rng));
    ScorerConfig cfg;
    cfg.family = ScorerFamily::similarity_baseline;
    cfg.backend = "hash:dim=32";
    SeriesResult r = subject_series(corpus, Scorer::untrained(cfg));
    REQUIRE(r.series.size() == 1);
    REQUIRE(r.series[0].visits.size() == 2);
    CHECK(r.series[0].visits[0].visit_index == 1);
    CHECK(r.series[0].visits[1].visit_index == 3);
}

TEST_CASE("cohort table flags match the sign of planted shifts") {
    // healthy markers drift up, AD markers drift down, MCI in between; the
    // distributions are constructed, not trained
    Rng rng(17);
    std::vector<MarkerSeries> series;
    auto add_cohort = [&](Diagnosis dx, int n, double level, double drift) {
        for (int s = 0; s < n; ++s) {
            std::vector<double> values;
            double v = level + 0.02 * rng.gauss();
            for (int visit = 0; visit < 3; ++visit) {
                values.push_back(v);
                v += drift + 0.01 * rng.gauss();
            }
            series.push_back(series_of(to_string(dx) + std::to_string(s), dx, values));
        }
    };
    add_cohort(Diagnosis::healthy, 15, 0.60, +0.05);
    add_cohort(Diagnosis::mci, 15, 0.55, -0.03);
    add_cohort(Diagnosis::ad, 15, 0.45, -0.08);

    CohortTable table = cohort_table(series);
    REQUIRE(table.rows.size() == 3);

    auto row = [&](Diagnosis dx) -> const CohortSummary& {
        for (const CohortSummary& r : table.rows)
            if (r.cohort == dx) return r;
        FAIL("missing cohort row");
        return table.rows.front();
    };
    CHECK(row(Diagnosis::healthy).marker.mean > row(Diagnosis::mci).marker.mean);
    CHECK(row(Diagnosis::mci).marker.mean > row(Diagnosis::ad).marker.mean);
    CHECK(row(Diagnosis::healthy).delta_end_start.mean > 0.0);
    CHECK(row(Diagnosis::ad).delta_end_start.mean < 0.0);

    auto cmp = [&](Diagnosis a, Diagnosis b) -> const CohortComparison& {
        for (const CohortComparison& c : table.comparisons)
            if ((c.a == a && c.b == b) || (c.a == b && c.b == a)) return c;
        FAIL("missing comparison");
        return table.comparisons.front();
    };
    CHECK(cmp(Diagnosis::healthy, Diagnosis::ad).p_marker < 0.05);
    CHECK(cmp(Diagnosis::healthy, Diagnosis::ad).p_delta_end_start < 0.05);
    CHECK(cmp(Diagnosis::healthy, Diagnosis::mci).p_delta_end_start < 0.05);
}

TEST_CASE("identical cohorts raise no significance flags") {
    std::vector<MarkerSeries> series;
    for (int s = 0; s < 10; ++s) {
        std::vector<double> values{0.5 + 0.01 * s, 0.52 + 0.01 * s};
        series.push_back(series_of("h" + std::to_string(s), Diagnosis::healthy, values));
        series.push_back(series_of("a" + std::to_string(s), Diagnosis::ad, values));
    }
    CohortTable table = cohort_table(series);
    REQUIRE(table.comparisons.size() == 1);
    CHECK(table.comparisons[0].p_marker > 0.05);
    CHECK(table.comparisons[0].p_delta_end_start > 0.05);
    CHECK(table.comparisons[0].p_delta_long > 0.05);
}

TEST_CASE("delta_long pooling modes agree on uniform visit counts") {
    std::vector<MarkerSeries> series;
    Rng rng(23);
    for (int s = 0; s < 8; ++s) {
        std::vector<double> values{rng.gauss(), rng.gauss(), rng.gauss()};
        series.push_back(series_of("s" + std::to_string(s), Diagnosis::healthy, values));
    }
    CohortTable per_subject = cohort_table(series, LongPooling::per_subject_mean);
    CohortTable pooled = cohort_table(series, LongPooling::pooled_diffs);
    // with equal visit counts the means coincide; the stddevs differ
    CHECK(per_subject.rows[0].delta_long.mean ==
          doctest::Approx(pooled.rows[0].delta_long.mean).epsilon(1e-12));
    CHECK(per_subject.rows[0].delta_long.n == 8);
    CHECK(pooled.rows[0].delta_long.n == 16);
}

TEST_CASE("disruptive analysis recovers a planted gap") {
    Rng rng(29);
    std::vector<ScoredPair> scored;
    int idx = 0;
    for (int i = 0; i < 400; ++i) {
        bool dis = i % 3 == 0;  // a third disruptive
        double score = dis ? 0.41 + 0.09 * rng.gauss() : 0.64 + 0.15 * rng.gauss();
        scored.push_back(adj("n:" + std::to_string(i / 8), idx++ % 8, score, dis));
    }
    DisruptiveReport rep = disruptive_analysis(scored);
    REQUIRE(rep.disruptive.has_value());
    REQUIRE(rep.non_disruptive.has_value());
    CHECK(rep.fraction_disruptive == doctest::Approx(134.0 / 400.0));
    CHECK(rep.disruptive->mean == doctest::Approx(0.41).epsilon(0.08));
    CHECK(rep.non_disruptive->mean == doctest::Approx(0.64).epsilon(0.08));
    REQUIRE(rep.pct_delta.has_value());
    CHECK(*rep.pct_delta == doctest::Approx(pct_delta(0.64, 0.41)).epsilon(0.25));
    REQUIRE(rep.t.has_value());
    CHECK(rep.t->p_value < 0.05);
}

TEST_CASE("disruptive analysis with one empty side yields a null comparison") {
    std::vector<ScoredPair> scored;
    for (int i = 0; i < 5; ++i) scored.push_back(adj("n:1", i, 0.4, true));
    DisruptiveReport rep = disruptive_analysis(scored);
    CHECK(rep.disruptive.has_value());
    CHECK_FALSE(rep.non_disruptive.has_value());
    CHECK_FALSE(rep.pct_delta.has_value());
    CHECK_FALSE(rep.t.has_value());
    CHECK(rep.fraction_disruptive == 1.0);
}

TEST_CASE("marker table round-trips") {
    std::vector<MarkerSeries> series{
        series_of("s1", Diagnosis::ad, {0.5, 0.4, 0.45}),
        series_of("s2", Diagnosis::healthy, {0.6, 0.7}),
    };
    auto path = std::filesystem::temp_directory_path() / "cohmark_marker_test.tsv";
    write_marker_table(series, path);
    std::vector<MarkerSeries> back = read_marker_table(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].subject_id == "s1");
    CHECK(back[0].diagnosis == Diagnosis::ad);
    REQUIRE(back[0].visits.size() == 3);
    CHECK(back[0].visits[2].value == doctest::Approx(0.45));
    std::filesystem::remove(path);
}
