#include "cohmark/marker.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "cohmark/errors.hpp"
#include "cohmark/pairs.hpp"

namespace fs = std::filesystem;

namespace cohmark {

double narrative_marker(std::span<const double> adjacent_scores) {
    if (adjacent_scores.empty()) throw DataError("narrative_marker: no adjacent scores");
    double sum = 0.0;
    for (double s : adjacent_scores) sum += s;
    return sum / static_cast<double>(adjacent_scores.size());
}

SeriesResult subject_series(const Corpus& corpus, const Scorer& scorer) {
    struct Visit {
        int visit_index;
        double marker;
        Diagnosis diagnosis;
    };
    std::map<std::string, std::vector<Visit>> per_subject;
    for (const Narrative& n : corpus.narratives) {
        if (n.utterances.size() < 2) continue;  // no adjacent pairs to score
        PairSet pairs = enumerate_pairs(n);
        std::vector<ScoredPair> scored;
        try {
            scored = score_pairs(corpus, pairs.coherent, scorer);
        } catch (const std::exception& e) {
            throw Error("subject_series: narrative " + n.ref() + ": " + e.what());
        }
        std::vector<double> values;
        values.reserve(scored.size());
        for (const ScoredPair& sp : scored) values.push_back(sp.score);
        per_subject[n.meta.subject_id].push_back(
            {n.meta.visit_index, narrative_marker(values), n.meta.diagnosis});
    }

    SeriesResult out;
    for (auto& [subject, visits] : per_subject) {
        if (visits.size() < 2) {
            out.excluded_subjects.push_back(subject);
            continue;
        }
        std::sort(visits.begin(), visits.end(),
                  [](const Visit& a, const Visit& b) { return a.visit_index < b.visit_index; });
        MarkerSeries s;
        s.subject_id = subject;
        s.diagnosis = visits.front().diagnosis;
        for (const Visit& v : visits) s.visits.push_back({v.visit_index, v.marker});
        out.series.push_back(std::move(s));
    }
    return out;
}

double delta_end_start(const MarkerSeries& series) {
    if (series.visits.size() < 2)
        throw DataError("delta_end_start: series for " + series.subject_id +
                        " has fewer than two visits");
    return series.visits.back().value - series.visits.front().value;
}

double delta_long(const MarkerSeries& series) {
    if (series.visits.size() < 2)
        throw DataError("delta_long: series for " + series.subject_id +
                        " has fewer than two visits");
    double sum = 0.0;
    for (std::size_t i = 1; i < series.visits.size(); ++i)
        sum += series.visits[i].value - series.visits[i - 1].value;
    return sum / static_cast<double>(series.visits.size() - 1);
}

CohortTable cohort_table(std::span<const MarkerSeries> series, LongPooling pooling) {
    struct Samples {
        std::vector<double> markers;  // per narrative
        std::vector<double> des;      // per subject
        std::vector<double> dlong;    // per subject or pooled diffs
        int n_subjects = 0;
    };
    std::map<Diagnosis, Samples> cohorts;
    for (const MarkerSeries& s : series) {
        Samples& c = cohorts[s.diagnosis];
        ++c.n_subjects;
        for (const MarkerPoint& v : s.visits) c.markers.push_back(v.value);
        c.des.push_back(delta_end_start(s));
        if (pooling == LongPooling::per_subject_mean) {
            c.dlong.push_back(delta_long(s));
        } else {
            for (std::size_t i = 1; i < s.visits.size(); ++i)
                c.dlong.push_back(s.visits[i].value - s.visits[i - 1].value);
        }
    }

    CohortTable table;
    for (const auto& [dx, c] : cohorts) {
        if (c.n_subjects == 0) {
            table.warnings.push_back("cohort " + to_string(dx) + " has no series, omitted");
            continue;
        }
        CohortSummary row;
        row.cohort = dx;
        row.marker = stats::describe(c.markers);
        row.delta_end_start = stats::describe(c.des);
        row.delta_long = stats::describe(c.dlong);
        row.n_subjects = c.n_subjects;
        row.n_narratives = static_cast<int>(c.markers.size());
        table.rows.push_back(row);
    }

    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (std::size_t j = i + 1; j < table.rows.size(); ++j) {
            const Samples& a = cohorts.at(table.rows[i].cohort);
            const Samples& b = cohorts.at(table.rows[j].cohort);
            CohortComparison cmp;
            cmp.a = table.rows[i].cohort;
            cmp.b = table.rows[j].cohort;
            cmp.p_marker = stats::mann_whitney(a.markers, b.markers).p_value;
            cmp.p_delta_end_start = stats::mann_whitney(a.des, b.des).p_value;
            cmp.p_delta_long = stats::mann_whitney(a.dlong, b.dlong).p_value;
            table.comparisons.push_back(cmp);
        }
    }
    return table;
}

DisruptiveReport disruptive_analysis(std::span<const ScoredPair> adjacent_scored) {
    DisruptiveReport report;
    std::vector<double> dis, non;
    for (const ScoredPair& sp : adjacent_scored) {
        if (sp.pair.label != PairLabel::coherent) continue;  // adjacent pairs only
        ++report.n_total;
        if (sp.disruptive) {
            ++report.n_disruptive;
            dis.push_back(sp.score);
        } else {
            non.push_back(sp.score);
        }
    }
    if (report.n_total == 0) throw DataError("disruptive_analysis: no adjacent scored pairs");
    report.fraction_disruptive =
        static_cast<double>(report.n_disruptive) / static_cast<double>(report.n_total);
    if (!dis.empty()) report.disruptive = stats::describe(dis);
    if (!non.empty()) report.non_disruptive = stats::describe(non);
    if (!dis.empty() && !non.empty()) {
        if (report.disruptive->mean + report.non_disruptive->mean != 0.0)
            report.pct_delta = pct_delta(report.non_disruptive->mean, report.disruptive->mean);
        if (dis.size() >= 2 && non.size() >= 2) report.t = stats::t_test(dis, non);
    }
    return report;
}

void write_marker_table(std::span<const MarkerSeries> series, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write marker table: " + path.string());
    out << "subject_id\tdiagnosis\tvisit_index\tmarker\n";
    out.precision(17);
    for (const MarkerSeries& s : series)
        for (const MarkerPoint& v : s.visits)
            out << s.subject_id << '\t' << to_string(s.diagnosis) << '\t' << v.visit_index
                << '\t' << v.value << '\n';
}

std::vector<MarkerSeries> read_marker_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read marker table: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty marker table");
    std::map<std::string, MarkerSeries> by_subject;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string subject, dx, visit, value;
        if (!std::getline(ss, subject, '\t') || !std::getline(ss, dx, '\t') ||
            !std::getline(ss, visit, '\t') || !std::getline(ss, value, '\t'))
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": short row");
        MarkerSeries& s = by_subject[subject];
        s.subject_id = subject;
        s.diagnosis = parse_diagnosis(dx);
        s.visits.push_back({std::stoi(visit), std::stod(value)});
    }
    std::vector<MarkerSeries> out;
    for (auto& [subject, s] : by_subject) {
        (void)subject;
        std::sort(s.visits.begin(), s.visits.end(),
                  [](const MarkerPoint& a, const MarkerPoint& b) {
                      return a.visit_index < b.visit_index;
                  });
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::string fmt3(double v) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(3);
    ss << v;
    return ss.str();
}

}  // namespace

void write_cohort_table(const CohortTable& table, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write cohort table: " + path.string());
    out << "cohort\tn_subjects\tn_narratives\tmarker_mean\tmarker_std\t"
           "delta_end_start_mean\tdelta_end_start_std\tdelta_long_mean\tdelta_long_std\n";
    for (const CohortSummary& r : table.rows) {
        out << to_string(r.cohort) << '\t' << r.n_subjects << '\t' << r.n_narratives << '\t'
            << fmt3(r.marker.mean) << '\t' << fmt3(r.marker.stddev) << '\t'
            << fmt3(r.delta_end_start.mean) << '\t' << fmt3(r.delta_end_start.stddev) << '\t'
            << fmt3(r.delta_long.mean) << '\t' << fmt3(r.delta_long.stddev) << '\n';
    }
    out << "\ncohort_a\tcohort_b\tp_marker\tp_delta_end_start\tp_delta_long\t"
           "significant_marker\tsignificant_delta_end_start\tsignificant_delta_long\n";
    for (const CohortComparison& c : table.comparisons) {
        out << to_string(c.a) << '\t' << to_string(c.b) << '\t' << fmt3(c.p_marker) << '\t'
            << fmt3(c.p_delta_end_start) << '\t' << fmt3(c.p_delta_long) << '\t'
            << (c.p_marker < 0.05 ? "yes" : "no") << '\t'
            << (c.p_delta_end_start < 0.05 ? "yes" : "no") << '\t'
            << (c.p_delta_long < 0.05 ? "yes" : "no") << '\n';
    }
    for (const std::string& w : table.warnings) out << "# warning: " << w << '\n';
}

}  // namespace cohmark
