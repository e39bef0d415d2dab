#pragma once

#include <string>

#include "mclnn/dataset.hpp"
#include "mclnn/feature_format.hpp"
#include "mclnn/model.hpp"

namespace mclnn {

// A trained model on disk: architecture as embedded JSON, every parameter
// tensor in flattening order, then the standardization mean and deviation as
// the last two records. Masks are rebuilt from the config on load, never
// stored.
struct SavedModel {
    ModelConfig config;
    ModelParams params;
    ZScoreParams zscore;
};

void save_model(const std::string& path, const ModelConfig& config, const ModelParams& params,
                const ZScoreParams& zscore);
SavedModel load_model(const std::string& path);

}  // namespace mclnn
