// Python bindings for the coherence-marker core: parsing, pair construction,
// the scorer families, evaluation metrics, statistics and the marker math.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cohmark/backends.hpp"
#include "cohmark/biomarker.hpp"
#include "cohmark/marker.hpp"
#include "cohmark/metrics.hpp"
#include "cohmark/models.hpp"
#include "cohmark/pairs.hpp"
#include "cohmark/stats.hpp"
#include "cohmark/training.hpp"
#include "cohmark/transcript.hpp"

namespace py = pybind11;
using namespace cohmark;

namespace {

Narrative parse_transcript_str(const std::string& text, const std::string& dialect,
                               const std::vector<std::string>& speakers) {
    std::istringstream in(text);
    ParseOptions opts;
    opts.subject_speakers = speakers;
    return parse_transcript(in, dialect, opts, "<python>");
}

stats::TestResult mann_whitney_py(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::string& mode) {
    stats::MwMode m = stats::MwMode::auto_mode;
    if (mode == "exact") m = stats::MwMode::exact;
    else if (mode == "normal_approx") m = stats::MwMode::normal_approx;
    else if (mode != "auto") throw ConfigError("unknown mann_whitney mode '" + mode + "'");
    return stats::mann_whitney(a, b, m);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "language-coherence scoring and the longitudinal digital marker";

    py::register_exception<Error>(m, "CohmarkError");

    py::enum_<Diagnosis>(m, "Diagnosis")
        .value("healthy", Diagnosis::healthy)
        .value("mci", Diagnosis::mci)
        .value("ad", Diagnosis::ad)
        .value("other", Diagnosis::other);

    py::class_<Utterance>(m, "Utterance")
        .def_readonly("index", &Utterance::index)
        .def_readonly("speaker", &Utterance::speaker)
        .def_readonly("words", &Utterance::words)
        .def_readonly("disruptive", &Utterance::disruptive)
        .def_readonly("raw", &Utterance::raw)
        .def("text", &Utterance::text);

    py::class_<SessionMeta>(m, "SessionMeta")
        .def_readonly("subject_id", &SessionMeta::subject_id)
        .def_readonly("visit_index", &SessionMeta::visit_index)
        .def_readonly("diagnosis", &SessionMeta::diagnosis)
        .def_readonly("mmse", &SessionMeta::mmse)
        .def_readonly("cdr", &SessionMeta::cdr)
        .def_readonly("hdr", &SessionMeta::hdr);

    py::class_<Narrative>(m, "Narrative")
        .def_readonly("meta", &Narrative::meta)
        .def_readonly("utterances", &Narrative::utterances)
        .def("ref", &Narrative::ref);

    py::class_<Corpus>(m, "Corpus")
        .def_readonly("narratives", &Corpus::narratives)
        .def("subject_count", &Corpus::subject_count);

    m.def("normalize_text",
          [](const std::string& raw) {
              NormalizeResult r = normalize_text(raw);
              return py::make_tuple(r.words, r.codes);
          },
          py::arg("raw"), "normalized word list and the set of bracketed codes seen");
    m.def("parse_transcript", &parse_transcript_str, py::arg("text"),
          py::arg("dialect") = "chat",
          py::arg("speakers") = std::vector<std::string>{"PAR"});
    m.def("load_cohort",
          [](const std::filesystem::path& root,
             std::optional<std::filesystem::path> metadata) {
              return load_cohort(root, metadata);
          },
          py::arg("root"), py::arg("metadata") = std::nullopt);

    py::enum_<PairLabel>(m, "PairLabel")
        .value("coherent", PairLabel::coherent)
        .value("incoherent", PairLabel::incoherent);

    py::class_<UtterancePair>(m, "UtterancePair")
        .def_readonly("narrative_ref", &UtterancePair::narrative_ref)
        .def_readonly("anchor_index", &UtterancePair::anchor_index)
        .def_readonly("partner_index", &UtterancePair::partner_index)
        .def_readonly("label", &UtterancePair::label);

    m.def("enumerate_pairs",
          [](const Narrative& n) {
              PairSet ps = enumerate_pairs(n);
              return py::make_tuple(ps.coherent, ps.incoherent);
          },
          py::arg("narrative"));
    m.def("resample_negatives", &resample_negatives, py::arg("narrative"),
          py::arg("per_positive"), py::arg("epoch_seed"));
    m.def("split_by_subject",
          [](const Corpus& c, std::array<double, 3> ratios, std::uint64_t seed) {
              SplitManifest sm = split_by_subject(c, ratios, seed);
              std::map<std::string, std::string> out;
              for (const auto& [subject, split] : sm.assignment)
                  out[subject] = to_string(split);
              return out;
          },
          py::arg("corpus"), py::arg("ratios"), py::arg("seed"));

    // model primitives
    m.def("concat_features", &concat_features, py::arg("u1"), py::arg("u2"));
    m.def("margin_loss", &margin_loss, py::arg("f_pos"), py::arg("f_neg"), py::arg("n"));
    m.def("sequence_perplexity",
          [](const std::string& text, const std::string& backend, double floor) {
              return sequence_perplexity(text, *make_generative(backend), floor);
          },
          py::arg("pair_text"), py::arg("backend") = "uniform:vocab=16",
          py::arg("floor") = 1e-12);
    m.def("generative_score",
          [](const std::string& text, const std::string& backend, double floor) {
              return generative_score(text, *make_generative(backend), floor);
          },
          py::arg("pair_text"), py::arg("backend") = "uniform:vocab=16",
          py::arg("floor") = 1e-12);
    m.def("baseline_similarity_score",
          [](const std::string& t1, const std::string& t2, const std::string& backend) {
              return baseline_similarity_score(t1, t2, *make_encoder(backend));
          },
          py::arg("text1"), py::arg("text2"), py::arg("backend") = "hash:dim=64");

    py::class_<Scorer>(m, "Scorer")
        .def_static("from_checkpoint",
                    [](const std::filesystem::path& p) {
                        return Scorer::from_checkpoint(Checkpoint::load(p));
                    },
                    py::arg("path"))
        .def_static("untrained",
                    [](const std::string& family, const std::string& backend) {
                        ScorerConfig c;
                        c.family = family_from_string(family);
                        c.backend = backend;
                        return Scorer::untrained(c);
                    },
                    py::arg("family"), py::arg("backend"))
        .def("score", &Scorer::score, py::arg("text1"), py::arg("text2"))
        .def("id", &Scorer::id);

    // metrics
    m.def("pct_delta", &pct_delta, py::arg("f_pos"), py::arg("f_neg"));

    // statistics
    py::class_<stats::TestResult>(m, "TestResult")
        .def_readonly("statistic", &stats::TestResult::statistic)
        .def_readonly("p_value", &stats::TestResult::p_value)
        .def_readonly("method", &stats::TestResult::method)
        .def_readonly("n1", &stats::TestResult::n1)
        .def_readonly("n2", &stats::TestResult::n2)
        .def_readonly("degenerate", &stats::TestResult::degenerate);
    m.def("mann_whitney", &mann_whitney_py, py::arg("a"), py::arg("b"),
          py::arg("mode") = "auto");
    m.def("t_test",
          [](const std::vector<double>& a, const std::vector<double>& b) {
              return stats::t_test(a, b);
          },
          py::arg("a"), py::arg("b"));
    m.def("describe",
          [](const std::vector<double>& v, bool sample_std) {
              stats::Descriptive d = stats::describe(v, sample_std);
              return py::make_tuple(d.mean, d.stddev, d.n);
          },
          py::arg("values"), py::arg("sample_std") = true);

    // marker math
    m.def("narrative_marker",
          [](const std::vector<double>& scores) { return narrative_marker(scores); },
          py::arg("adjacent_scores"));
    m.def("delta_end_start",
          [](const std::vector<double>& values) {
              MarkerSeries s;
              s.subject_id = "<python>";
              for (std::size_t i = 0; i < values.size(); ++i)
                  s.visits.push_back({static_cast<int>(i + 1), values[i]});
              return delta_end_start(s);
          },
          py::arg("series"));
    m.def("delta_long",
          [](const std::vector<double>& values) {
              MarkerSeries s;
              s.subject_id = "<python>";
              for (std::size_t i = 0; i < values.size(); ++i)
                  s.visits.push_back({static_cast<int>(i + 1), values[i]});
              return delta_long(s);
          },
          py::arg("series"));

    // biomarker bins
    py::class_<Bin>(m, "Bin")
        .def_readonly("label", &Bin::label)
        .def_readonly("lo", &Bin::lo)
        .def_readonly("hi", &Bin::hi)
        .def("contains", &Bin::contains)
        .def("interval", &Bin::interval);
    py::class_<BinSpec>(m, "BinSpec").def_readonly("bins", &BinSpec::bins);
    m.def("default_bins",
          [](const std::string& kind) { return default_bins(biomarker_from_string(kind)); },
          py::arg("kind"));
    m.def("assign_bin",
          [](double value, const BinSpec& spec) { return assign_bin(value, spec); },
          py::arg("value"), py::arg("spec"));
}
