#include <doctest.h>

#include "cohmark/biomarker.hpp"
#include "cohmark/errors.hpp"
#include "cohmark/rng.hpp"

using namespace cohmark;

namespace {

MarkerSeries series_with(const std::string& subject, double first, double last) {
    MarkerSeries s;
    s.subject_id = subject;
    s.diagnosis = Diagnosis::ad;
    s.visits = {{1, first}, {2, last}};
    return s;
}

Narrative stub_narrative(const std::string& subject, int visit) {
    Narrative n;
    n.meta.subject_id = subject;
    n.meta.visit_index = visit;
    n.meta.diagnosis = Diagnosis::ad;
    Utterance u;
    u.index = 0;
    u.words = {"stub"};
    n.utterances.push_back(u);
    return n;
}

}  // namespace

TEST_CASE("default bins reproduce the published layouts") {
    BinSpec mmse = default_bins(BiomarkerKind::mmse_delta);
    REQUIRE(mmse.bins.size() == 4);
    CHECK(mmse.bins[3].label == "Severe");
    CHECK(mmse.bins[3].lo == -27);
    CHECK(mmse.bins[3].hi == -19);

    BinSpec cdr = default_bins(BiomarkerKind::cdr_delta);
    REQUIRE(cdr.bins.size() == 4);
    CHECK(assign_bin(0.5, cdr) == "Low");  // [0, 0.5] is upper-inclusive

    BinSpec hdr = default_bins(BiomarkerKind::hdr_last);
    REQUIRE(hdr.bins.size() == 3);
    CHECK(hdr.bins[2].hi == 23);
    CHECK_THROWS_AS(biomarker_from_string("weird"), ConfigError);
}

TEST_CASE("assign_bin hits every published boundary") {
    BinSpec mmse = default_bins(BiomarkerKind::mmse_delta);
    CHECK(assign_bin(-6, mmse) == "Low");
    CHECK(assign_bin(2, mmse) == "Low");
    CHECK(assign_bin(-7, mmse) == "Minor");
    CHECK(assign_bin(-12, mmse) == "Minor");
    CHECK(assign_bin(-13, mmse) == "Moderate");
    CHECK(assign_bin(-18, mmse) == "Moderate");
    CHECK(assign_bin(-19, mmse) == "Severe");
    CHECK(assign_bin(-27, mmse) == "Severe");
    CHECK(assign_bin(-15, mmse) == "Moderate");
    CHECK(assign_bin(5, mmse) == kUnbinned);   // above every interval
    CHECK(assign_bin(-30, mmse) == kUnbinned);

    BinSpec cdr = default_bins(BiomarkerKind::cdr_delta);
    CHECK(assign_bin(0.0, cdr) == "Low");
    CHECK(assign_bin(0.5, cdr) == "Low");
    CHECK(assign_bin(0.51, cdr) == "Minor");
    CHECK(assign_bin(1.5, cdr) == "Minor");
    CHECK(assign_bin(2.5, cdr) == "Moderate");
    CHECK(assign_bin(3.0, cdr) == "Severe");
    CHECK(assign_bin(-0.5, cdr) == kUnbinned);

    BinSpec hdr = default_bins(BiomarkerKind::hdr_last);
    CHECK(assign_bin(0, hdr) == "NoDepression");
    CHECK(assign_bin(7, hdr) == "NoDepression");
    CHECK(assign_bin(8, hdr) == "Mild");
    CHECK(assign_bin(16, hdr) == "Mild");
    CHECK(assign_bin(17, hdr) == "Moderate");
    CHECK(assign_bin(23, hdr) == "Moderate");
    CHECK(assign_bin(24, hdr) == kUnbinned);
}

TEST_CASE("assign_bin is total and deterministic over a sweep") {
    BinSpec mmse = default_bins(BiomarkerKind::mmse_delta);
    for (double v = -40.0; v <= 40.0; v += 0.25) {
        std::string a = assign_bin(v, mmse);
        std::string b = assign_bin(v, mmse);
        CHECK(a == b);
        CHECK_FALSE(a.empty());
    }
}

TEST_CASE("bin spec validation catches overlap and duplicates") {
    BinSpec bad;
    bad.kind = BiomarkerKind::mmse_delta;
    bad.bins = {{"A", 0, 5, true, true}, {"B", 5, 9, true, true}};  // both include 5
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.bins = {{"A", 0, 5, true, true}, {"A", 6, 9, true, true}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    BinSpec ok;
    ok.bins = {{"A", 0, 5, true, true}, {"B", 5, 9, false, true}};
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("relabeling bins permutes rows without changing statistics") {
    Rng rng(31);
    Corpus corpus;
    std::vector<MarkerSeries> series;
    for (int s = 0; s < 12; ++s) {
        std::string id = "s" + std::to_string(s);
        Narrative first = stub_narrative(id, 1);
        Narrative last = stub_narrative(id, 2);
        first.meta.mmse = 25;
        last.meta.mmse = 25 - (s % 4) * 7;  // deltas 0, -7, -14, -21
        corpus.narratives.push_back(first);
        corpus.narratives.push_back(last);
        series.push_back(series_with(id, 0.6, 0.6 - 0.05 * (s % 4) + 0.01 * rng.gauss()));
    }
    BinSpec spec = default_bins(BiomarkerKind::mmse_delta);
    AssociationTable base = association_table(corpus, series, spec);

    BinSpec relabeled = spec;
    for (Bin& b : relabeled.bins) b.label = "bin_" + b.label;
    AssociationTable renamed = association_table(corpus, series, relabeled);
    REQUIRE(base.rows.size() == renamed.rows.size());
    for (std::size_t i = 0; i < base.rows.size(); ++i) {
        CHECK(renamed.rows[i].label == "bin_" + base.rows[i].label);
        CHECK(renamed.rows[i].n_subjects == base.rows[i].n_subjects);
        if (base.rows[i].delta_coherence)
            CHECK(renamed.rows[i].delta_coherence->mean ==
                  doctest::Approx(base.rows[i].delta_coherence->mean));
    }
}

TEST_CASE("association table recovers a planted monotone trend") {
    Rng rng(37);
    Corpus corpus;
    std::vector<MarkerSeries> series;
    // four groups with increasingly negative MMSE change and coherence change
    struct Group {
        double mmse_delta;
        double coh_delta;
        int n;
    };
    std::vector<Group> groups{{0, -0.005, 12}, {-9, -0.03, 12}, {-15, -0.08, 12},
                              {-22, -0.2, 12}};
    int idx = 0;
    for (const Group& g : groups) {
        for (int i = 0; i < g.n; ++i, ++idx) {
            std::string id = "s" + std::to_string(idx);
            Narrative first = stub_narrative(id, 1);
            Narrative last = stub_narrative(id, 2);
            first.meta.mmse = 26;
            last.meta.mmse = 26 + static_cast<int>(g.mmse_delta);
            corpus.narratives.push_back(first);
            corpus.narratives.push_back(last);
            series.push_back(
                series_with(id, 0.6, 0.6 + g.coh_delta + 0.02 * rng.gauss()));
        }
    }
    AssociationTable table =
        association_table(corpus, series, default_bins(BiomarkerKind::mmse_delta));
    REQUIRE(table.rows.size() == 4);
    for (const AssociationRow& r : table.rows) CHECK(r.n_subjects == 12);
    for (std::size_t i = 1; i < table.rows.size(); ++i)
        CHECK(table.rows[i].delta_coherence->mean < table.rows[i - 1].delta_coherence->mean);
    // extremes differ significantly
    bool found = false;
    for (const BinComparison& c : table.tests) {
        if ((c.a == "Low" && c.b == "Severe") || (c.a == "Severe" && c.b == "Low")) {
            found = true;
            CHECK(c.p_value < 0.05);
        }
    }
    CHECK(found);
}

TEST_CASE("association table conservation: bins + unbinned + missing = total") {
    Corpus corpus;
    std::vector<MarkerSeries> series;
    // subject with in-range delta
    for (auto [id, first, last] :
         std::vector<std::tuple<std::string, int, int>>{{"a", 26, 20},  // -6 -> Low
                                                        {"b", 28, 8},   // -20 -> Severe
                                                        {"c", 20, 25}}) {  // +5 -> unbinned
        Narrative n1 = stub_narrative(id, 1);
        Narrative n2 = stub_narrative(id, 2);
        n1.meta.mmse = first;
        n2.meta.mmse = last;
        corpus.narratives.push_back(n1);
        corpus.narratives.push_back(n2);
        series.push_back(series_with(id, 0.5, 0.45));
    }
    // subject with no MMSE at all
    corpus.narratives.push_back(stub_narrative("d", 1));
    corpus.narratives.push_back(stub_narrative("d", 2));
    series.push_back(series_with("d", 0.5, 0.4));

    AssociationTable table =
        association_table(corpus, series, default_bins(BiomarkerKind::mmse_delta));
    int binned = 0;
    for (const AssociationRow& r : table.rows) binned += r.n_subjects;
    CHECK(binned + table.n_unbinned +
              static_cast<int>(table.missing_data_subjects.size()) ==
          static_cast<int>(series.size()));
    CHECK(table.n_unbinned == 1);
    CHECK(table.missing_data_subjects == std::vector<std::string>{"d"});
}

TEST_CASE("hdr association uses the last available record") {
    Corpus corpus;
    std::vector<MarkerSeries> series;
    Narrative n1 = stub_narrative("s", 1);
    Narrative n2 = stub_narrative("s", 2);
    Narrative n3 = stub_narrative("s", 3);
    n1.meta.hdr = 20;
    n2.meta.hdr = 18;  // last record with a value; visit 3 is missing HDR
    corpus.narratives.push_back(n1);
    corpus.narratives.push_back(n2);
    corpus.narratives.push_back(n3);
    MarkerSeries s;
    s.subject_id = "s";
    s.diagnosis = Diagnosis::ad;
    s.visits = {{1, 0.6}, {2, 0.5}, {3, 0.4}};
    series.push_back(s);

    AssociationTable table =
        association_table(corpus, series, default_bins(BiomarkerKind::hdr_last));
    const AssociationRow* moderate = nullptr;
    for (const AssociationRow& r : table.rows)
        if (r.label == "Moderate") moderate = &r;
    REQUIRE(moderate != nullptr);
    CHECK(moderate->n_subjects == 1);  // hdr 18 lands in [17,23]
}

TEST_CASE("empty bins produce n=0 rows with null stats") {
    Corpus corpus;
    std::vector<MarkerSeries> series;
    Narrative n1 = stub_narrative("only", 1);
    Narrative n2 = stub_narrative("only", 2);
    n1.meta.mmse = 26;
    n2.meta.mmse = 25;  // delta -1 -> Low
    corpus.narratives.push_back(n1);
    corpus.narratives.push_back(n2);
    series.push_back(series_with("only", 0.5, 0.52));
    AssociationTable table =
        association_table(corpus, series, default_bins(BiomarkerKind::mmse_delta));
    int nonzero = 0;
    for (const AssociationRow& r : table.rows) {
        if (r.label == "Low") {
            CHECK(r.n_subjects == 1);
            ++nonzero;
        } else {
            CHECK(r.n_subjects == 0);
            CHECK_FALSE(r.delta_coherence.has_value());
        }
    }
    CHECK(nonzero == 1);
    CHECK(table.tests.empty());  // nothing to compare against
}
