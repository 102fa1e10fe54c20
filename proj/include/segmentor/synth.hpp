#pragma once

#include "segmentor/features_io.hpp"

namespace seg {

// Self-contained synthetic corpus: Gaussian background frames with a
// contiguous event interval shifted by a contrast on a random subset of
// dimensions. Optional label jitter moves each annotated boundary by at most
// one frame, mimicking annotator disagreement.
struct SynthSpec {
    std::size_t n_train = 600, n_dev = 100, n_test = 100;
    std::size_t t_min = 50, t_max = 100;
    std::size_t dim = 13;
    double noise_sigma = 1.0;
    double contrast = 3.0;
    std::size_t min_duration = 10;
    bool jitter = false;
    double frame_period_ms = 10.0;
};

inline void validate_synth_spec(const SynthSpec& spec) {
    if (spec.t_min < 2 || spec.t_max < spec.t_min) throw DataError("bad synthetic length range");
    if (spec.dim == 0) throw DataError("synthetic dim must be positive");
    if (spec.min_duration + 1 >= spec.t_min)
        throw DataError("min_duration leaves no room for a boundary pair");
    if (spec.noise_sigma < 0.0) throw DataError("noise sigma must be nonnegative");
}

struct SynthCorpus {
    std::filesystem::path root;
    DatasetManifest train, dev, test;
};

// Deterministic given (spec, seed): identical corpora byte for byte.
inline SynthCorpus synth_generate(const std::filesystem::path& root, const SynthSpec& spec,
                                  std::uint64_t seed) {
    validate_synth_spec(spec);
    std::filesystem::create_directories(root / "feats");
    std::mt19937_64 rng(seed);

    SynthCorpus corpus;
    corpus.root = root;
    struct SplitPlan {
        const char* name;
        std::size_t count;
        DatasetManifest* manifest;
    };
    SplitPlan plans[] = {{"train", spec.n_train, &corpus.train},
                         {"dev", spec.n_dev, &corpus.dev},
                         {"test", spec.n_test, &corpus.test}};

    for (const auto& plan : plans) {
        plan.manifest->split = plan.name;
        std::vector<std::string> rel_paths;
        for (std::size_t i = 0; i < plan.count; ++i) {
            const std::size_t T = spec.t_min + uniform_index(rng, spec.t_max - spec.t_min + 1);
            FeatureSequence seq;
            seq.values = Matrix(T, spec.dim);
            seq.frame_period_ms = spec.frame_period_ms;
            for (double& v : seq.values.data()) v = spec.noise_sigma * gaussian(rng);

            TimingPair truth;
            truth.onset = uniform_index(rng, T - spec.min_duration);
            truth.offset = truth.onset + spec.min_duration +
                           uniform_index(rng, T - truth.onset - spec.min_duration);

            std::vector<std::size_t> active;
            for (std::size_t d = 0; d < spec.dim; ++d)
                if (uniform01(rng) < 0.5) active.push_back(d);
            if (active.empty()) active.push_back(uniform_index(rng, spec.dim));
            for (std::size_t t = truth.onset; t <= truth.offset; ++t)
                for (std::size_t d : active) seq.values(t, d) += spec.contrast;

            TimingPair label = truth;
            if (spec.jitter) {
                auto wiggle = [&](std::size_t v) {
                    long j = static_cast<long>(uniform_index(rng, 3)) - 1;
                    long moved = static_cast<long>(v) + j;
                    return moved < 0 ? std::size_t{0} : static_cast<std::size_t>(moved);
                };
                TimingPair jittered{wiggle(truth.onset), std::min(wiggle(truth.offset), T - 1)};
                if (jittered.onset < jittered.offset) label = jittered;
            }

            char name[64];
            std::snprintf(name, sizeof(name), "feats/%s_%04zu.segf", plan.name, i);
            seq.source_id = name;
            write_features((root / name).string(), seq);
            plan.manifest->records.push_back({(root / name).string(), label});
            rel_paths.push_back(name);
        }
        save_manifest((root / (std::string(plan.name) + ".tsv")).string(), *plan.manifest,
                      rel_paths);
    }
    return corpus;
}

}  // namespace seg
