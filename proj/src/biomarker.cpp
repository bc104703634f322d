#include "cohmark/biomarker.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "cohmark/errors.hpp"

namespace fs = std::filesystem;

namespace cohmark {

std::string to_string(BiomarkerKind k) {
    switch (k) {
        case BiomarkerKind::mmse_delta: return "mmse_delta";
        case BiomarkerKind::cdr_delta: return "cdr_delta";
        case BiomarkerKind::hdr_last: return "hdr_last";
    }
    return "mmse_delta";
}

BiomarkerKind biomarker_from_string(const std::string& s) {
    if (s == "mmse_delta" || s == "mmse") return BiomarkerKind::mmse_delta;
    if (s == "cdr_delta" || s == "cdr") return BiomarkerKind::cdr_delta;
    if (s == "hdr_last" || s == "hdr") return BiomarkerKind::hdr_last;
    throw ConfigError("unknown biomarker kind '" + s + "'");
}

bool Bin::contains(double v) const {
    bool above = lo_inclusive ? v >= lo : v > lo;
    bool below = hi_inclusive ? v <= hi : v < hi;
    return above && below;
}

std::string Bin::interval() const {
    std::ostringstream ss;
    ss << (lo_inclusive ? '[' : '(') << lo << ',' << hi << (hi_inclusive ? ']' : ')');
    return ss.str();
}

void BinSpec::validate() const {
    if (bins.empty()) throw ConfigError("bin spec has no bins");
    for (const Bin& b : bins)
        if (b.lo > b.hi)
            throw ConfigError("bin '" + b.label + "' has lower bound above upper bound");
    for (std::size_t i = 0; i < bins.size(); ++i) {
        for (std::size_t j = i + 1; j < bins.size(); ++j) {
            if (bins[i].label == bins[j].label)
                throw ConfigError("duplicate bin label '" + bins[i].label + "'");
            // overlap check on interval endpoints
            const Bin& a = bins[i];
            const Bin& b = bins[j];
            double lo = std::max(a.lo, b.lo);
            double hi = std::min(a.hi, b.hi);
            bool overlap = lo < hi ||
                           (lo == hi && a.contains(lo) && b.contains(lo));
            if (overlap)
                throw ConfigError("bins '" + a.label + "' and '" + b.label + "' overlap");
        }
    }
}

BinSpec default_bins(BiomarkerKind kind) {
    BinSpec spec;
    spec.kind = kind;
    switch (kind) {
        case BiomarkerKind::mmse_delta:
            spec.bins = {{"Low", -6, 2, true, true},
                         {"Minor", -12, -7, true, true},
                         {"Moderate", -18, -13, true, true},
                         {"Severe", -27, -19, true, true}};
            break;
        case BiomarkerKind::cdr_delta:
            spec.bins = {{"Low", 0, 0.5, true, true},
                         {"Minor", 0.5, 1.5, false, true},
                         {"Moderate", 1.5, 2.5, false, true},
                         {"Severe", 2.5, 3, false, true}};
            break;
        case BiomarkerKind::hdr_last:
            spec.bins = {{"NoDepression", 0, 7, true, true},
                         {"Mild", 8, 16, true, true},
                         {"Moderate", 17, 23, true, true}};
            break;
    }
    spec.validate();
    return spec;
}

std::string assign_bin(double value, const BinSpec& spec) {
    for (const Bin& b : spec.bins)
        if (b.contains(value)) return b.label;
    return kUnbinned;
}

namespace {

std::optional<double> biomarker_value(const Corpus& corpus, const MarkerSeries& s,
                                      BiomarkerKind kind) {
    const Narrative* first = nullptr;
    const Narrative* last = nullptr;
    for (const Narrative& n : corpus.narratives) {
        if (n.meta.subject_id != s.subject_id) continue;
        if (!first || n.meta.visit_index < first->meta.visit_index) first = &n;
        if (!last || n.meta.visit_index > last->meta.visit_index) last = &n;
    }
    if (!first || !last) return std::nullopt;
    switch (kind) {
        case BiomarkerKind::mmse_delta:
            if (first->meta.mmse && last->meta.mmse)
                return static_cast<double>(*last->meta.mmse - *first->meta.mmse);
            return std::nullopt;
        case BiomarkerKind::cdr_delta:
            if (first->meta.cdr && last->meta.cdr) return *last->meta.cdr - *first->meta.cdr;
            return std::nullopt;
        case BiomarkerKind::hdr_last:
            // last available record, walking backwards over visits
            {
                std::vector<const Narrative*> subj;
                for (const Narrative& n : corpus.narratives)
                    if (n.meta.subject_id == s.subject_id) subj.push_back(&n);
                std::sort(subj.begin(), subj.end(), [](const Narrative* a, const Narrative* b) {
                    return a->meta.visit_index < b->meta.visit_index;
                });
                for (auto it = subj.rbegin(); it != subj.rend(); ++it)
                    if ((*it)->meta.hdr) return static_cast<double>(*(*it)->meta.hdr);
            }
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

AssociationTable association_table(const Corpus& corpus,
                                   std::span<const MarkerSeries> series, const BinSpec& spec) {
    spec.validate();
    AssociationTable table;
    table.kind = spec.kind;

    std::map<std::string, std::vector<double>> deltas_by_bin;
    for (const MarkerSeries& s : series) {
        std::optional<double> bio = biomarker_value(corpus, s, spec.kind);
        if (!bio) {
            table.missing_data_subjects.push_back(s.subject_id);
            continue;
        }
        std::string label = assign_bin(*bio, spec);
        if (label == kUnbinned) {
            ++table.n_unbinned;
            table.unbinned_subjects.push_back(s.subject_id);
            continue;
        }
        deltas_by_bin[label].push_back(delta_end_start(s));
    }

    for (const Bin& b : spec.bins) {
        AssociationRow row;
        row.label = b.label;
        row.interval = b;
        auto it = deltas_by_bin.find(b.label);
        if (it != deltas_by_bin.end() && !it->second.empty()) {
            row.n_subjects = static_cast<int>(it->second.size());
            row.delta_coherence = stats::describe(it->second);
        }
        table.rows.push_back(std::move(row));
    }

    for (std::size_t i = 0; i < spec.bins.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.bins.size(); ++j) {
            auto a = deltas_by_bin.find(spec.bins[i].label);
            auto b = deltas_by_bin.find(spec.bins[j].label);
            if (a == deltas_by_bin.end() || b == deltas_by_bin.end() || a->second.empty() ||
                b->second.empty())
                continue;
            BinComparison cmp;
            cmp.a = spec.bins[i].label;
            cmp.b = spec.bins[j].label;
            cmp.p_value = stats::mann_whitney(a->second, b->second).p_value;
            table.tests.push_back(cmp);
        }
    }
    return table;
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

void write_association_table(const AssociationTable& table, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write association table: " + path.string());
    out << "# biomarker: " << to_string(table.kind) << '\n';
    out << "bin\tn_subjects\tinterval\tdelta_coherence_mean\tdelta_coherence_std\n";
    for (const AssociationRow& r : table.rows) {
        out << r.label << '\t' << r.n_subjects << '\t' << r.interval.interval() << '\t';
        if (r.delta_coherence)
            out << fmt3(r.delta_coherence->mean) << '\t' << fmt3(r.delta_coherence->stddev);
        else
            out << "-\t-";
        out << '\n';
    }
    out << "\nbin_a\tbin_b\tp_value\tsignificant\n";
    for (const BinComparison& c : table.tests)
        out << c.a << '\t' << c.b << '\t' << fmt3(c.p_value) << '\t'
            << (c.p_value < 0.05 ? "yes" : "no") << '\n';
    if (table.n_unbinned > 0) out << "# unbinned subjects: " << table.n_unbinned << '\n';
    for (const std::string& s : table.missing_data_subjects)
        out << "# missing biomarker: " << s << '\n';
}

}  // namespace cohmark
