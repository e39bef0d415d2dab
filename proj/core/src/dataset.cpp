#include "mclnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "mclnn/feature_format.hpp"

namespace mclnn {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

int parse_int(const std::string& text, const std::string& what, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const int value = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw std::runtime_error("index line " + std::to_string(line_no) + ": bad " + what +
                                 " \"" + text + "\"");
    }
}

}  // namespace

std::vector<IndexEntry> read_index(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open " + csv_path);

    std::vector<IndexEntry> entries;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "id,path,label,fold") {
                throw std::runtime_error(csv_path + ": expected header id,path,label,fold, got \"" +
                                         line + "\"");
            }
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 4) {
            throw std::runtime_error("index line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                     std::to_string(fields.size()));
        }
        IndexEntry entry;
        entry.id = fields[0];
        entry.path = fields[1];
        entry.label = parse_int(fields[2], "label", line_no);
        entry.fold = parse_int(fields[3], "fold", line_no);
        if (entry.id.empty()) {
            throw std::runtime_error("index line " + std::to_string(line_no) + ": empty id");
        }
        if (!seen.insert(entry.id).second) {
            throw std::runtime_error("index line " + std::to_string(line_no) + ": duplicate id \"" +
                                     entry.id + "\"");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

void write_index(const std::string& csv_path, const std::vector<IndexEntry>& entries) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw IoError("cannot open " + csv_path + " for writing");
    out << "id,path,label,fold\n";
    for (const auto& entry : entries) {
        out << entry.id << ',' << entry.path << ',' << entry.label << ',' << entry.fold << '\n';
    }
    if (!out) throw IoError("short write to " + csv_path);
}

std::vector<FeatureClip> load_clips(const std::string& csv_path) {
    const auto entries = read_index(csv_path);
    const auto base = std::filesystem::path(csv_path).parent_path();

    std::vector<FeatureClip> clips;
    clips.reserve(entries.size());
    for (const auto& entry : entries) {
        const auto full = (base / entry.path).string();
        StoredClip stored = read_feature_clip(full);
        if (static_cast<int>(stored.label) != entry.label) {
            throw std::runtime_error("clip " + entry.id + ": index label " +
                                     std::to_string(entry.label) + " does not match stored label " +
                                     std::to_string(stored.label));
        }
        FeatureClip clip;
        clip.id = entry.id;
        clip.frames = std::move(stored.frames);
        clip.label = entry.label;
        clip.fold = entry.fold;
        clips.push_back(std::move(clip));
    }
    return clips;
}

ZScoreParams fit_zscore(const std::vector<FeatureClip>& clips) {
    if (clips.empty()) throw std::invalid_argument("fit_zscore: no clips");
    const std::size_t width = clips.front().frames.cols();
    for (const auto& clip : clips) {
        if (clip.frames.cols() != width) {
            throw std::invalid_argument("fit_zscore: clip " + clip.id + " has " +
                                        std::to_string(clip.frames.cols()) + " features, expected " +
                                        std::to_string(width));
        }
    }

    ZScoreParams params{Matrix(1, width), Matrix(1, width)};
    std::size_t total = 0;
    for (const auto& clip : clips) {
        for (std::size_t r = 0; r < clip.frames.rows(); ++r) {
            for (std::size_t c = 0; c < width; ++c) params.mean(0, c) += clip.frames(r, c);
        }
        total += clip.frames.rows();
    }
    if (total == 0) throw std::invalid_argument("fit_zscore: clips contain no frames");
    for (std::size_t c = 0; c < width; ++c) params.mean(0, c) /= static_cast<double>(total);

    for (const auto& clip : clips) {
        for (std::size_t r = 0; r < clip.frames.rows(); ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                const double d = clip.frames(r, c) - params.mean(0, c);
                params.std(0, c) += d * d;
            }
        }
    }
    for (std::size_t c = 0; c < width; ++c) {
        params.std(0, c) = std::max(std::sqrt(params.std(0, c) / static_cast<double>(total)), kStdFloor);
    }
    return params;
}

Matrix apply_zscore(const Matrix& frames, const ZScoreParams& params) {
    if (frames.cols() != params.mean.cols()) {
        throw std::invalid_argument("apply_zscore: " + std::to_string(frames.cols()) +
                                    " features but statistics cover " +
                                    std::to_string(params.mean.cols()));
    }
    Matrix out(frames.rows(), frames.cols());
    for (std::size_t r = 0; r < frames.rows(); ++r) {
        for (std::size_t c = 0; c < frames.cols(); ++c) {
            out(r, c) = (frames(r, c) - params.mean(0, c)) / params.std(0, c);
        }
    }
    return out;
}

std::size_t segment_count(std::size_t total, std::size_t segment, std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("segment_count: stride must be positive");
    if (total < segment) return 0;
    return (total - segment) / stride + 1;
}

std::vector<Segment> extract_segments(const FeatureClip& clip, std::size_t clip_index,
                                      std::size_t segment, std::size_t stride) {
    if (segment == 0) throw std::invalid_argument("extract_segments: segment must be positive");
    if (stride == 0) throw std::invalid_argument("extract_segments: stride must be positive");
    if (clip.frames.rows() < segment) {
        throw std::runtime_error("clip " + clip.id + ": " + std::to_string(clip.frames.rows()) +
                                 " frames is too short for a " + std::to_string(segment) +
                                 "-frame segment");
    }
    std::vector<Segment> segments;
    for (std::size_t start = 0; start + segment <= clip.frames.rows(); start += stride) {
        Segment s;
        s.frames = Matrix(segment, clip.frames.cols());
        for (std::size_t r = 0; r < segment; ++r) {
            for (std::size_t c = 0; c < clip.frames.cols(); ++c) {
                s.frames(r, c) = clip.frames(start + r, c);
            }
        }
        s.clip_index = clip_index;
        s.start = start;
        segments.push_back(std::move(s));
    }
    return segments;
}

std::vector<Segment> extract_all_segments(const std::vector<FeatureClip>& clips,
                                          std::size_t segment, std::size_t stride) {
    std::vector<Segment> all;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        auto cut = extract_segments(clips[i], i, segment, stride);
        all.insert(all.end(), std::make_move_iterator(cut.begin()),
                   std::make_move_iterator(cut.end()));
    }
    return all;
}

FoldAssignment make_folds(const std::vector<int>& labels, int fold_count, std::uint64_t seed) {
    if (fold_count < 2) {
        throw std::invalid_argument("make_folds: need at least 2 folds, got " +
                                    std::to_string(fold_count));
    }

    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);

    FoldAssignment result;
    result.fold.assign(labels.size(), -1);
    Rng rng(seed);
    for (auto& [label, members] : by_label) {
        if (members.size() < static_cast<std::size_t>(fold_count)) {
            result.warnings.push_back("class " + std::to_string(label) + " has only " +
                                      std::to_string(members.size()) + " clips for " +
                                      std::to_string(fold_count) + " folds");
        }
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) {
            result.fold[members[i]] = static_cast<int>(i % static_cast<std::size_t>(fold_count));
        }
    }
    return result;
}

FoldAssignment make_folds(const std::vector<FeatureClip>& clips, int fold_count,
                          std::uint64_t seed) {
    std::vector<int> labels;
    labels.reserve(clips.size());
    for (const FeatureClip& clip : clips) labels.push_back(clip.label);
    return make_folds(labels, fold_count, seed);
}

}  // namespace mclnn
