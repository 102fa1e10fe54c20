#pragma once

#include <string>

#include "segmentor/common.hpp"

namespace seg {

// Boundary-pair label: onset and offset frame indices, 0-based, strictly
// ordered, both within [0, T-1].
struct TimingPair {
    std::size_t onset = 0;
    std::size_t offset = 1;

    bool operator==(const TimingPair&) const = default;
};

inline void validate_pair(const TimingPair& y, std::size_t frames) {
    if (!(y.onset < y.offset) || y.offset > frames - 1 || frames < 2)
        throw DataError("invalid timing pair (" + std::to_string(y.onset) + ", " +
                        std::to_string(y.offset) + ") for " + std::to_string(frames) + " frames");
}

// Per-frame acoustic features: T x D, one row per frame.
struct FeatureSequence {
    Matrix values;
    double frame_period_ms = 10.0;
    std::string source_id;

    std::size_t frames() const { return values.rows(); }
    std::size_t dim() const { return values.cols(); }
};

inline void validate_sequence(const FeatureSequence& seq) {
    if (seq.frames() < 2)
        throw DataError("feature sequence needs at least 2 frames: " + seq.source_id);
    if (!all_finite(seq.values))
        throw NumericError("non-finite feature values: " + seq.source_id);
}

}  // namespace seg
