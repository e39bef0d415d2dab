#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mclnn/checkpoint.hpp"
#include "mclnn/dataset.hpp"
#include "mclnn/feature_format.hpp"
#include "mclnn/model.hpp"
#include "mclnn/rng.hpp"
#include "support/tmpdir.hpp"

using namespace mclnn;

namespace {

Matrix random_frames(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.uniform(-4.0, 4.0);
    return m;
}

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

FeatureClip make_clip(const std::string& id, std::size_t rows, std::size_t cols, int label,
                      std::uint64_t seed) {
    FeatureClip clip;
    clip.id = id;
    clip.frames = random_frames(rows, cols, seed);
    clip.label = label;
    return clip;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("feature container round trips through float32") {
    testutil::TempDir dir;
    const Matrix frames = random_frames(7, 5, 1);
    write_feature_clip(dir.str("a.mcln"), frames, 3);
    const StoredClip back = read_feature_clip(dir.str("a.mcln"));
    CHECK(back.label == 3);
    REQUIRE(back.frames.rows() == 7);
    REQUIRE(back.frames.cols() == 5);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        CHECK(back.frames.values()[i] == to_f32(frames.values()[i]));
    }
    // rewriting the loaded copy is byte identical: float32 is a fixed point
    write_feature_clip(dir.str("b.mcln"), back.frames, back.label);
    CHECK(testutil::read_file(dir.str("a.mcln")) == testutil::read_file(dir.str("b.mcln")));
}

TEST_CASE("container header is validated") {
    testutil::TempDir dir;
    const Matrix frames = random_frames(3, 2, 2);
    write_feature_clip(dir.str("good.mcln"), frames, 1);
    std::string bytes = testutil::read_file(dir.str("good.mcln"));

    SUBCASE("wrong magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        testutil::write_file(dir.str("bad.mcln"), bad);
        CHECK_THROWS_AS(read_feature_clip(dir.str("bad.mcln")), BadMagicError);
    }
    SUBCASE("truncated payload names the offset") {
        testutil::write_file(dir.str("bad.mcln"), bytes.substr(0, bytes.size() - 3));
        CHECK_THROWS_WITH_AS(read_feature_clip(dir.str("bad.mcln")), doctest::Contains("byte"),
                             TruncatedFileError);
    }
    SUBCASE("truncated header") {
        testutil::write_file(dir.str("bad.mcln"), bytes.substr(0, 9));
        CHECK_THROWS_AS(read_feature_clip(dir.str("bad.mcln")), TruncatedFileError);
    }
    SUBCASE("absurd shape is rejected before allocation") {
        std::string bad = bytes;
        // rows field at offset 6: set to 0xFFFFFFFF
        for (int i = 0; i < 4; ++i) bad[6 + i] = static_cast<char>(0xFF);
        testutil::write_file(dir.str("bad.mcln"), bad);
        CHECK_THROWS_AS(read_feature_clip(dir.str("bad.mcln")), ShapeOverflowError);
    }
    SUBCASE("unsupported version") {
        std::string bad = bytes;
        bad[4] = 9;
        testutil::write_file(dir.str("bad.mcln"), bad);
        CHECK_THROWS_AS(read_feature_clip(dir.str("bad.mcln")), IoError);
    }
    SUBCASE("trailing garbage is rejected") {
        testutil::write_file(dir.str("bad.mcln"), bytes + "xx");
        CHECK_THROWS_AS(read_feature_clip(dir.str("bad.mcln")), IoError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_feature_clip(dir.str("nope.mcln")), IoError);
    }
}

TEST_CASE("index csv round trips and is line-precise on errors") {
    testutil::TempDir dir;
    const std::vector<IndexEntry> entries{
        {"a", "feat/a.mcln", 0, 0}, {"b", "feat/b.mcln", 1, 2}, {"c", "feat/c.mcln", 0, -1}};
    write_index(dir.str("index.csv"), entries);
    const std::string text = testutil::read_file(dir.str("index.csv"));
    CHECK(text.substr(0, 19) == "id,path,label,fold\n");
    CHECK(text.find("\r") == std::string::npos);

    const auto back = read_index(dir.str("index.csv"));
    REQUIRE(back.size() == 3);
    CHECK(back[0].id == "a");
    CHECK(back[1].fold == 2);
    CHECK(back[2].fold == -1);

    SUBCASE("missing header") {
        testutil::write_file(dir.str("bad.csv"), "a,feat/a.mcln,0,0\n");
        CHECK_THROWS_WITH(read_index(dir.str("bad.csv")), doctest::Contains("header"));
    }
    SUBCASE("wrong column count names the line") {
        testutil::write_file(dir.str("bad.csv"), "id,path,label,fold\na,x.mcln,0,0\nb,y.mcln\n");
        CHECK_THROWS_WITH(read_index(dir.str("bad.csv")), doctest::Contains("line 3"));
    }
    SUBCASE("non-numeric label names the line") {
        testutil::write_file(dir.str("bad.csv"), "id,path,label,fold\na,x.mcln,zero,0\n");
        CHECK_THROWS_WITH(read_index(dir.str("bad.csv")), doctest::Contains("line 2"));
    }
    SUBCASE("duplicate ids are rejected") {
        testutil::write_file(dir.str("bad.csv"),
                             "id,path,label,fold\na,x.mcln,0,0\na,y.mcln,1,1\n");
        CHECK_THROWS_WITH(read_index(dir.str("bad.csv")), doctest::Contains("duplicate"));
    }
    SUBCASE("crlf input is tolerated") {
        testutil::write_file(dir.str("crlf.csv"),
                             "id,path,label,fold\r\na,x.mcln,4,1\r\n");
        const auto rows = read_index(dir.str("crlf.csv"));
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].label == 4);
    }
}

TEST_CASE("load_clips resolves paths against the csv directory") {
    testutil::TempDir dir;
    std::filesystem::create_directories(dir.path() / "feat");
    write_feature_clip(dir.str("feat/a.mcln"), random_frames(4, 3, 5), 2);
    write_feature_clip(dir.str("feat/b.mcln"), random_frames(6, 3, 6), 0);
    write_index(dir.str("index.csv"),
                {{"a", "feat/a.mcln", 2, 0}, {"b", "feat/b.mcln", 0, 1}});

    const auto clips = load_clips(dir.str("index.csv"));
    REQUIRE(clips.size() == 2);
    CHECK(clips[0].id == "a");
    CHECK(clips[0].label == 2);
    CHECK(clips[0].fold == 0);
    CHECK(clips[0].frames.rows() == 4);
    CHECK(clips[1].fold == 1);

    SUBCASE("label mismatch between index and container is an error") {
        write_index(dir.str("index.csv"), {{"a", "feat/a.mcln", 1, 0}});
        CHECK_THROWS_WITH(load_clips(dir.str("index.csv")), doctest::Contains("label"));
    }
    SUBCASE("missing container names the clip") {
        write_index(dir.str("index.csv"), {{"zz", "feat/zz.mcln", 0, 0}});
        CHECK_THROWS_WITH(load_clips(dir.str("index.csv")), doctest::Contains("zz"));
    }
}

TEST_CASE("zscore on a two-frame example") {
    FeatureClip clip;
    clip.frames = Matrix(2, 1, {1.0, 3.0});
    const ZScoreParams params = fit_zscore({clip});
    CHECK(params.mean(0, 0) == 2.0);
    CHECK(params.std(0, 0) == 1.0);
    const Matrix z = apply_zscore(clip.frames, params);
    CHECK(z(0, 0) == -1.0);
    CHECK(z(1, 0) == 1.0);
}

TEST_CASE("zscore output has zero mean and unit variance per feature") {
    std::vector<FeatureClip> clips;
    for (int i = 0; i < 3; ++i) clips.push_back(make_clip("c", 20, 4, 0, 100 + i));
    const ZScoreParams params = fit_zscore(clips);
    std::vector<double> sum(4, 0.0), sq(4, 0.0);
    std::size_t n = 0;
    for (const auto& clip : clips) {
        const Matrix z = apply_zscore(clip.frames, params);
        for (std::size_t r = 0; r < z.rows(); ++r) {
            for (std::size_t c = 0; c < 4; ++c) {
                sum[c] += z(r, c);
                sq[c] += z(r, c) * z(r, c);
            }
        }
        n += z.rows();
    }
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(std::abs(sum[c] / static_cast<double>(n)) < 1e-9);
        CHECK(std::abs(sq[c] / static_cast<double>(n) - 1.0) < 1e-9);
    }
}

TEST_CASE("constant features map to zero through the std floor") {
    FeatureClip clip;
    clip.frames = Matrix::filled(10, 2, 7.5);
    const ZScoreParams params = fit_zscore({clip});
    CHECK(params.std(0, 0) == kStdFloor);
    const Matrix z = apply_zscore(clip.frames, params);
    for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("standardization is invertible") {
    const FeatureClip clip = make_clip("x", 15, 3, 0, 9);
    const ZScoreParams params = fit_zscore({clip});
    const Matrix z = apply_zscore(clip.frames, params);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            const double back = z(r, c) * params.std(0, c) + params.mean(0, c);
            CHECK(std::abs(back - clip.frames(r, c)) < 1e-9);
        }
    }
}

TEST_CASE("segment counts and starts follow the stride") {
    CHECK(segment_count(100, 29, 15) == 5);
    CHECK(segment_count(31, 29, 1) == 3);
    CHECK(segment_count(29, 29, 10) == 1);
    CHECK(segment_count(28, 29, 1) == 0);

    const FeatureClip clip = make_clip("s", 31, 2, 0, 11);
    const auto segments = extract_segments(clip, 4, 29, 1);
    REQUIRE(segments.size() == 3);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        CHECK(segments[i].clip_index == 4);
        CHECK(segments[i].start == i);
        CHECK(segments[i].frames.rows() == 29);
        CHECK(segments[i].frames(0, 0) == clip.frames(i, 0));
        CHECK(segments[i].frames(28, 1) == clip.frames(i + 28, 1));
    }
}

TEST_CASE("segments tile the clip exactly at stride q") {
    const FeatureClip clip = make_clip("t", 60, 3, 0, 12);
    const auto segments = extract_segments(clip, 0, 20, 20);
    REQUIRE(segments.size() == 3);
    CHECK(segments[2].start == 40);
}

TEST_CASE("short clips are rejected naming the clip") {
    const FeatureClip clip = make_clip("tiny", 5, 2, 0, 13);
    CHECK_THROWS_WITH(extract_segments(clip, 0, 29, 1), doctest::Contains("tiny"));
    CHECK_THROWS_AS(extract_segments(clip, 0, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(extract_segments(clip, 0, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(segment_count(10, 2, 0), std::invalid_argument);
}

TEST_CASE("extract_all_segments keeps clip indices aligned") {
    std::vector<FeatureClip> clips{make_clip("a", 40, 2, 0, 14), make_clip("b", 35, 2, 1, 15)};
    const auto segments = extract_all_segments(clips, 30, 5);
    // clip a: starts 0,5,10; clip b: starts 0,5
    REQUIRE(segments.size() == 5);
    CHECK(segments[0].clip_index == 0);
    CHECK(segments[3].clip_index == 1);
    CHECK(segments[4].start == 5);
}

TEST_CASE("make_folds deals each class round robin") {
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) labels.push_back(i % 3);
    const FoldAssignment assignment = make_folds(labels, 5, 42);
    REQUIRE(assignment.fold.size() == 30);
    CHECK(assignment.warnings.empty());
    // every fold gets exactly 2 of each class
    int counts[5][3] = {};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        REQUIRE(assignment.fold[i] >= 0);
        REQUIRE(assignment.fold[i] < 5);
        counts[assignment.fold[i]][labels[i]]++;
    }
    for (int f = 0; f < 5; ++f) {
        for (int c = 0; c < 3; ++c) CHECK(counts[f][c] == 2);
    }
}

TEST_CASE("make_folds is seed deterministic") {
    std::vector<int> labels(40, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 4);
    const auto a = make_folds(labels, 10, 7);
    const auto b = make_folds(labels, 10, 7);
    CHECK(a.fold == b.fold);
    const auto c = make_folds(labels, 10, 8);
    CHECK(a.fold != c.fold);
}

TEST_CASE("sparse classes draw a warning") {
    const std::vector<int> labels{0, 0, 0, 0, 1};
    const auto assignment = make_folds(labels, 4, 1);
    REQUIRE_FALSE(assignment.warnings.empty());
    CHECK(assignment.warnings[0].find("class 1") != std::string::npos);
}

TEST_CASE("make_folds needs at least two folds") {
    CHECK_THROWS_AS(make_folds(std::vector<int>{0, 1}, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_folds(std::vector<int>{0, 1}, 0, 0), std::invalid_argument);
}

TEST_CASE("folds partition the clips with near-equal class counts") {
    Rng rng(33);
    std::vector<int> labels;
    for (int i = 0; i < 47; ++i) labels.push_back(static_cast<int>(rng.next_below(4)));
    const auto assignment = make_folds(labels, 3, 9);
    std::map<int, std::map<int, int>> per_class_fold;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        REQUIRE(assignment.fold[i] >= 0);
        REQUIRE(assignment.fold[i] < 3);
        per_class_fold[labels[i]][assignment.fold[i]]++;
    }
    for (const auto& [label, folds] : per_class_fold) {
        int lo = 1 << 20;
        int hi = 0;
        for (int f = 0; f < 3; ++f) {
            const auto it = folds.find(f);
            const int count = it == folds.end() ? 0 : it->second;
            lo = std::min(lo, count);
            hi = std::max(hi, count);
        }
        CHECK(hi - lo <= 1);
    }
}

TEST_CASE("checkpoint save and load reproduce the model through float32") {
    testutil::TempDir dir;
    ModelConfig config;
    config.input_features = 5;
    config.class_count = 3;
    config.clnn_layers = {{1, 4, MaskSettings{2, -1}, TransferKind::sigmoid},
                          {1, 3, std::nullopt, TransferKind::tanh}};
    config.pooling = {PoolKind::max, 2};
    config.dense_head = {{6, TransferKind::sigmoid}};

    Rng rng(77);
    const ModelParams params = build_model(config, rng);
    ZScoreParams zscore;
    zscore.mean = random_frames(1, 5, 20);
    zscore.std = Matrix::filled(1, 5, 1.25);

    save_model(dir.str("model.mclw"), config, params, zscore);
    const SavedModel loaded = load_model(dir.str("model.mclw"));

    CHECK(model_config_to_json(loaded.config) == model_config_to_json(config));
    const auto flat = flatten_params(params);
    const auto flat_back = flatten_params(loaded.params);
    REQUIRE(flat.size() == flat_back.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        CHECK(flat_back[i] == to_f32(flat[i]));
    }
    for (std::size_t c = 0; c < 5; ++c) {
        CHECK(loaded.zscore.mean(0, c) == to_f32(zscore.mean(0, c)));
        CHECK(loaded.zscore.std(0, c) == to_f32(zscore.std(0, c)));
    }

    // masks are rebuilt from config, not stored
    REQUIRE(loaded.params.clnn[0].mask.has_value());
    CHECK_FALSE(loaded.params.clnn[1].mask.has_value());
    CHECK(loaded.params.clnn[0].mask->pattern.values() ==
          params.clnn[0].mask->pattern.values());

    // identical predictions after a round trip of the float32 weights
    FrameBlock segment(segment_size(config), 5);
    Rng data(21);
    for (double& v : segment.values()) v = data.uniform(-1.0, 1.0);
    ModelParams quantized = params;
    std::vector<double> flat_q = flat;
    for (double& v : flat_q) v = to_f32(v);
    unflatten_params(quantized, flat_q);
    const auto want = predict(quantized, segment);
    const auto got = predict(loaded.params, segment);
    REQUIRE(want.size() == got.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == want[i]);
}

TEST_CASE("checkpoint rejects tampered record counts and shapes") {
    testutil::TempDir dir;
    ModelConfig config;
    config.input_features = 4;
    config.class_count = 2;
    config.clnn_layers = {{1, 3, std::nullopt, TransferKind::sigmoid}};
    config.pooling = {PoolKind::mean, 1};
    config.dense_head = {};

    Rng rng(5);
    const ModelParams params = build_model(config, rng);
    ZScoreParams zscore;
    zscore.mean = Matrix(1, 4);
    zscore.std = Matrix::filled(1, 4, 1.0);
    save_model(dir.str("model.mclw"), config, params, zscore);

    Checkpoint raw = read_checkpoint(dir.str("model.mclw"));

    SUBCASE("missing record") {
        raw.tensors.pop_back();
        write_checkpoint(dir.str("short.mclw"), raw);
        CHECK_THROWS_WITH(load_model(dir.str("short.mclw")), doctest::Contains("record"));
    }
    SUBCASE("wrong tensor shape") {
        raw.tensors[0] = Matrix(2, 2);
        write_checkpoint(dir.str("bad.mclw"), raw);
        CHECK_THROWS(load_model(dir.str("bad.mclw")));
    }
    SUBCASE("bad magic") {
        std::string bytes = testutil::read_file(dir.str("model.mclw"));
        bytes[3] = 'Z';
        testutil::write_file(dir.str("bad.mclw"), bytes);
        CHECK_THROWS_AS(load_model(dir.str("bad.mclw")), BadMagicError);
    }
    SUBCASE("config json must parse") {
        Checkpoint broken = raw;
        broken.config_json = "{ not json";
        write_checkpoint(dir.str("bad.mclw"), broken);
        CHECK_THROWS_AS(load_model(dir.str("bad.mclw")), ConfigError);
    }
}

}  // TEST_SUITE
