#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mclnn/model.hpp"

namespace mclnn {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("model config: unknown key \"" + it.key() + "\" in " + where);
        }
    }
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) {
        throw ConfigError("model config: missing key \"" + key + "\" in " + where);
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("model config: key \"" + key + "\" in " + where +
                          " has the wrong type");
    }
}

}  // namespace

ModelConfig parse_model_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& err) {
        throw ConfigError(std::string("model config: invalid JSON: ") + err.what());
    }
    if (!root.is_object()) throw ConfigError("model config: top level must be an object");
    reject_unknown_keys(root,
                        {"schema_version", "input_features", "class_count", "clnn_layers",
                         "pooling", "dense_head"},
                        "top level");

    ModelConfig config;
    config.schema_version = require<int>(root, "schema_version", "top level");
    config.input_features = require<std::size_t>(root, "input_features", "top level");
    config.class_count = require<std::size_t>(root, "class_count", "top level");

    const json layers = require<json>(root, "clnn_layers", "top level");
    if (!layers.is_array()) throw ConfigError("model config: clnn_layers must be an array");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string where = "clnn_layers[" + std::to_string(i) + "]";
        const json& item = layers[i];
        if (!item.is_object()) throw ConfigError("model config: " + where + " must be an object");
        reject_unknown_keys(item, {"order", "width", "mask", "transfer"}, where);
        ClnnLayerConfig layer;
        layer.order = require<int>(item, "order", where);
        layer.width = require<std::size_t>(item, "width", where);
        if (item.contains("mask") && !item.at("mask").is_null()) {
            const json& m = item.at("mask");
            reject_unknown_keys(m, {"bandwidth", "overlap"}, where + ".mask");
            layer.mask = MaskSettings{require<std::int64_t>(m, "bandwidth", where + ".mask"),
                                      require<std::int64_t>(m, "overlap", where + ".mask")};
        }
        if (item.contains("transfer")) {
            try {
                layer.transfer = parse_transfer(item.at("transfer").get<std::string>());
            } catch (const std::invalid_argument& err) {
                throw ConfigError("model config: " + where + ": " + err.what());
            }
        }
        config.clnn_layers.push_back(layer);
    }

    const json pooling = require<json>(root, "pooling", "top level");
    reject_unknown_keys(pooling, {"statistic", "extra_frames"}, "pooling");
    config.pooling.extra_frames = require<std::size_t>(pooling, "extra_frames", "pooling");
    if (pooling.contains("statistic")) {
        try {
            config.pooling.statistic = parse_pool(pooling.at("statistic").get<std::string>());
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("model config: pooling: ") + err.what());
        }
    }

    const json head = require<json>(root, "dense_head", "top level");
    if (!head.is_array()) throw ConfigError("model config: dense_head must be an array");
    for (std::size_t i = 0; i < head.size(); ++i) {
        const std::string where = "dense_head[" + std::to_string(i) + "]";
        const json& item = head[i];
        if (!item.is_object()) throw ConfigError("model config: " + where + " must be an object");
        reject_unknown_keys(item, {"width", "transfer"}, where);
        DenseLayerConfig layer;
        layer.width = require<std::size_t>(item, "width", where);
        if (item.contains("transfer")) {
            try {
                layer.transfer = parse_transfer(item.at("transfer").get<std::string>());
            } catch (const std::invalid_argument& err) {
                throw ConfigError("model config: " + where + ": " + err.what());
            }
        }
        config.dense_head.push_back(layer);
    }

    try {
        config.validate();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
    }
    return config;
}

ModelConfig load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("model config: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_model_config(buffer.str());
}

std::string model_config_to_json(const ModelConfig& config) {
    json root;
    root["schema_version"] = config.schema_version;
    root["input_features"] = config.input_features;
    root["class_count"] = config.class_count;
    root["clnn_layers"] = json::array();
    for (const ClnnLayerConfig& layer : config.clnn_layers) {
        json item;
        item["order"] = layer.order;
        item["width"] = layer.width;
        if (layer.mask) {
            item["mask"] = {{"bandwidth", layer.mask->bandwidth},
                            {"overlap", layer.mask->overlap}};
        }
        item["transfer"] = transfer_name(layer.transfer);
        root["clnn_layers"].push_back(item);
    }
    root["pooling"] = {{"statistic", pool_name(config.pooling.statistic)},
                       {"extra_frames", config.pooling.extra_frames}};
    root["dense_head"] = json::array();
    for (const DenseLayerConfig& layer : config.dense_head) {
        root["dense_head"].push_back(
            {{"width", layer.width}, {"transfer", transfer_name(layer.transfer)}});
    }
    return root.dump(2) + "\n";
}

}  // namespace mclnn
