#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mclnn/matrix.hpp"
#include "mclnn/rng.hpp"

namespace mclnn {

// One clip of frame-level features, as loaded into memory for training.
struct FeatureClip {
    std::string id;
    Matrix frames;   // T x l
    int label = 0;
    int fold = -1;   // -1 when the index carries no fold assignment
};

// Entry of an index CSV: `id,path,label,fold`. Paths are stored relative to
// the CSV's directory so a dataset directory can be moved wholesale.
struct IndexEntry {
    std::string id;
    std::string path;
    int label = 0;
    int fold = -1;
};

std::vector<IndexEntry> read_index(const std::string& csv_path);
void write_index(const std::string& csv_path, const std::vector<IndexEntry>& entries);

// Loads every clip named by the index, resolving paths against the CSV dir.
std::vector<FeatureClip> load_clips(const std::string& csv_path);

// Per-feature standardization statistics. std is floored so constant
// features map to zero instead of dividing by zero.
struct ZScoreParams {
    Matrix mean;   // 1 x l
    Matrix std;    // 1 x l
};

inline constexpr double kStdFloor = 1e-8;

// Population statistics (divide by N, not N-1) over all frames of all clips.
ZScoreParams fit_zscore(const std::vector<FeatureClip>& clips);
Matrix apply_zscore(const Matrix& frames, const ZScoreParams& params);

// A training example: q consecutive frames cut from one clip.
struct Segment {
    Matrix frames;         // q x l
    std::size_t clip_index = 0;
    std::size_t start = 0;
};

// Count of segments of length `segment` a clip of `total` frames yields at
// the given stride: starts 0, stride, 2*stride, ... while start+segment <= total.
std::size_t segment_count(std::size_t total, std::size_t segment, std::size_t stride);

// Cuts one clip into segments. Throws when the clip is shorter than one
// segment, naming the clip and both lengths.
std::vector<Segment> extract_segments(const FeatureClip& clip, std::size_t clip_index,
                                      std::size_t segment, std::size_t stride);

std::vector<Segment> extract_all_segments(const std::vector<FeatureClip>& clips,
                                          std::size_t segment, std::size_t stride);

// Stratified fold assignment: clips of each class are shuffled with the
// seeded generator, then dealt round-robin across folds, so every fold sees
// close to the same class balance.
struct FoldAssignment {
    std::vector<int> fold;   // parallel to the input clips
    std::vector<std::string> warnings;
};

FoldAssignment make_folds(const std::vector<int>& labels, int fold_count, std::uint64_t seed);
FoldAssignment make_folds(const std::vector<FeatureClip>& clips, int fold_count,
                          std::uint64_t seed);

}  // namespace mclnn
