#include "mclnn/checkpoint.hpp"

namespace mclnn {

namespace {

Matrix row_vector(const std::vector<double>& values) {
    Matrix m(1, values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(0, i) = values[i];
    return m;
}

void copy_record(const Matrix& record, Matrix& into, const std::string& what,
                 std::size_t index) {
    if (record.rows() != into.rows() || record.cols() != into.cols()) {
        throw IoError("checkpoint record " + std::to_string(index) + " (" + what + "): shape " +
                      shape_string(record) + ", expected " + shape_string(into));
    }
    into = record;
}

void copy_record(const Matrix& record, std::vector<double>& into, const std::string& what,
                 std::size_t index) {
    if (record.rows() != 1 || record.cols() != into.size()) {
        throw IoError("checkpoint record " + std::to_string(index) + " (" + what + "): shape " +
                      shape_string(record) + ", expected 1x" + std::to_string(into.size()));
    }
    for (std::size_t i = 0; i < into.size(); ++i) into[i] = record(0, i);
}

}  // namespace

void save_model(const std::string& path, const ModelConfig& config, const ModelParams& params,
                const ZScoreParams& zscore) {
    Checkpoint checkpoint;
    checkpoint.config_json = model_config_to_json(config);
    for (const ClnnLayerParams& layer : params.clnn) {
        for (const Matrix& w : layer.weights) checkpoint.tensors.push_back(w);
        checkpoint.tensors.push_back(row_vector(layer.bias));
    }
    for (const DenseParams& layer : params.head) {
        checkpoint.tensors.push_back(layer.weights);
        checkpoint.tensors.push_back(row_vector(layer.bias));
    }
    checkpoint.tensors.push_back(zscore.mean);
    checkpoint.tensors.push_back(zscore.std);
    write_checkpoint(path, checkpoint);
}

SavedModel load_model(const std::string& path) {
    const Checkpoint checkpoint = read_checkpoint(path);

    SavedModel model;
    model.config = parse_model_config(checkpoint.config_json);
    Rng rng(0);
    model.params = build_model(model.config, rng);

    std::size_t expected = 2;   // standardization mean and deviation
    for (const ClnnLayerParams& layer : model.params.clnn) {
        expected += layer.weights.size() + 1;
    }
    expected += model.params.head.size() * 2;
    if (checkpoint.tensors.size() != expected) {
        throw IoError(path + ": " + std::to_string(checkpoint.tensors.size()) +
                      " tensor records, architecture needs " + std::to_string(expected));
    }

    std::size_t index = 0;
    for (std::size_t i = 0; i < model.params.clnn.size(); ++i) {
        ClnnLayerParams& layer = model.params.clnn[i];
        const std::string name = "conditional layer " + std::to_string(i);
        for (Matrix& w : layer.weights) {
            copy_record(checkpoint.tensors[index], w, name + " weights", index);
            ++index;
        }
        copy_record(checkpoint.tensors[index], layer.bias, name + " bias", index);
        ++index;
    }
    for (std::size_t i = 0; i < model.params.head.size(); ++i) {
        DenseParams& layer = model.params.head[i];
        const std::string name = "dense layer " + std::to_string(i);
        copy_record(checkpoint.tensors[index], layer.weights, name + " weights", index);
        ++index;
        copy_record(checkpoint.tensors[index], layer.bias, name + " bias", index);
        ++index;
    }

    const std::size_t l = model.config.input_features;
    model.zscore.mean = Matrix(1, l);
    model.zscore.std = Matrix(1, l);
    copy_record(checkpoint.tensors[index], model.zscore.mean, "standardization mean", index);
    ++index;
    copy_record(checkpoint.tensors[index], model.zscore.std, "standardization deviation", index);
    return model;
}

}  // namespace mclnn
