#include "cohmark/pairs.hpp"

#include <algorithm>
#include <fstream>

#include "cohmark/errors.hpp"
#include "cohmark/rng.hpp"

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace cohmark {

std::string to_string(PairLabel l) {
    return l == PairLabel::coherent ? "coherent" : "incoherent";
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "train";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split '" + s + "'");
}

PairSet enumerate_pairs(const Narrative& narrative) {
    const int k = static_cast<int>(narrative.utterances.size());
    if (k < 2)
        throw DataError("enumerate_pairs: narrative " + narrative.ref() +
                        " has fewer than two utterances");
    PairSet out;
    const std::string ref = narrative.ref();
    out.coherent.reserve(k - 1);
    out.incoherent.reserve(static_cast<std::size_t>(k - 1) * (k - 2) / 2);
    for (int i = 0; i + 1 < k; ++i) {
        out.coherent.push_back({ref, i, i + 1, PairLabel::coherent});
        for (int j = i + 2; j < k; ++j)
            out.incoherent.push_back({ref, i, j, PairLabel::incoherent});
    }
    return out;
}

std::vector<std::string> SplitManifest::subjects(Split s) const {
    std::vector<std::string> out;
    for (const auto& [subject, split] : assignment)
        if (split == s) out.push_back(subject);
    return out;
}

void SplitManifest::save(const fs::path& path) const {
    json j;
    j["seed"] = seed;
    j["ratios"] = ratios;
    json a = json::object();
    for (const auto& [subject, split] : assignment) a[subject] = to_string(split);
    j["assignment"] = std::move(a);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write split manifest: " + path.string());
    out << j.dump(1, '\t') << "\n";
}

SplitManifest SplitManifest::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read split manifest: " + path.string());
    json j;
    in >> j;
    SplitManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.ratios = j.at("ratios").get<std::array<double, 3>>();
    for (const auto& [subject, split] : j.at("assignment").items())
        m.assignment[subject] = split_from_string(split.get<std::string>());
    return m;
}

SplitManifest split_by_subject(const Corpus& corpus, std::array<double, 3> ratios,
                               std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1, got " + std::to_string(sum));

    std::vector<std::string> subjects;
    for (const auto& [subject, narratives] : corpus.by_subject()) {
        (void)narratives;
        subjects.push_back(subject);
    }
    int n_splits = 0;
    for (double r : ratios)
        if (r > 0.0) ++n_splits;
    if (static_cast<int>(subjects.size()) < n_splits)
        throw DataError("split_by_subject: " + std::to_string(subjects.size()) +
                        " subjects cannot fill " + std::to_string(n_splits) + " splits");

    const int n = static_cast<int>(subjects.size());
    // largest-remainder apportionment
    std::array<int, 3> counts{};
    std::array<double, 3> remainders{};
    int assigned = 0;
    for (int s = 0; s < 3; ++s) {
        double quota = ratios[s] * n;
        counts[s] = static_cast<int>(quota);
        remainders[s] = quota - counts[s];
        assigned += counts[s];
    }
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return remainders[x] > remainders[y]; });
    for (int i = 0; assigned < n; ++i, ++assigned) counts[order[i % 3]] += 1;
    // no nonzero-ratio split may end up empty
    for (int s = 0; s < 3; ++s) {
        while (ratios[s] > 0.0 && counts[s] == 0) {
            int largest = 0;
            for (int t = 1; t < 3; ++t)
                if (counts[t] > counts[largest]) largest = t;
            counts[largest] -= 1;
            counts[s] += 1;
        }
    }

    Rng rng(mix_seed(seed, 0x5eedULL));
    rng.shuffle(subjects);

    SplitManifest manifest;
    manifest.seed = seed;
    manifest.ratios = ratios;
    int idx = 0;
    for (int s = 0; s < 3; ++s)
        for (int i = 0; i < counts[s]; ++i)
            manifest.assignment[subjects[idx++]] = static_cast<Split>(s);
    return manifest;
}

std::vector<UtterancePair> resample_negatives(const Narrative& narrative, int per_positive,
                                              std::uint64_t epoch_seed) {
    if (per_positive < 1) throw ConfigError("resample_negatives: per_positive must be >= 1");
    const int k = static_cast<int>(narrative.utterances.size());
    const std::string ref = narrative.ref();
    std::vector<UtterancePair> out;
    Rng rng(mix_seed(epoch_seed, fnv1a64(ref)));
    for (int i = 0; i + 1 < k; ++i) {
        const int pool = k - (i + 2);  // partners i+2 .. k-1
        if (pool <= 0) continue;
        auto picks = rng.sample_without_replacement(
            static_cast<std::size_t>(pool),
            static_cast<std::size_t>(std::min(per_positive, pool)));
        std::sort(picks.begin(), picks.end());
        for (std::size_t p : picks)
            out.push_back({ref, i, i + 2 + static_cast<int>(p), PairLabel::incoherent});
    }
    return out;
}

void export_pairs(const Corpus& corpus, std::vector<UtterancePair> pairs,
                  const fs::path& path) {
    std::sort(pairs.begin(), pairs.end(), [](const UtterancePair& a, const UtterancePair& b) {
        if (a.narrative_ref != b.narrative_ref) return a.narrative_ref < b.narrative_ref;
        if (a.anchor_index != b.anchor_index) return a.anchor_index < b.anchor_index;
        return a.partner_index < b.partner_index;
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write pair file: " + path.string());
    out << "narrative_ref\tanchor_index\tpartner_index\tlabel\ttext_1\ttext_2\n";
    const Narrative* cached = nullptr;
    for (const UtterancePair& p : pairs) {
        if (!cached || cached->ref() != p.narrative_ref) {
            cached = corpus.find(p.narrative_ref);
            if (!cached)
                throw DataError("export_pairs: unknown narrative '" + p.narrative_ref + "'");
        }
        const auto& utts = cached->utterances;
        if (p.anchor_index < 0 || p.partner_index >= static_cast<int>(utts.size()))
            throw DataError("export_pairs: pair indices out of range in " + p.narrative_ref);
        out << p.narrative_ref << '\t' << p.anchor_index << '\t' << p.partner_index << '\t'
            << to_string(p.label) << '\t' << utts[p.anchor_index].text() << '\t'
            << utts[p.partner_index].text() << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace cohmark
