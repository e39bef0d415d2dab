#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mclnn/matrix.hpp"

namespace mclnn {

// Binary formats, little-endian throughout. Values are stored as float32;
// conversion to and from the double-precision core is explicit here.
//
// Feature container ("MCLN"):
//   magic "MCLN" | u16 version=1 | u32 rows | u32 cols | u16 label |
//   u16 reserved=0 | rows*cols float32, row-major
//
// Checkpoint ("MCLW"):
//   magic "MCLW" | u16 version=1 | u16 reserved=0 | u32 json_length |
//   json bytes (model config) | one record per tensor:
//     u32 rows | u32 cols | u16 tag | u16 reserved=0 | rows*cols float32
//   Records reuse the container framing (shape, tag, payload) without the
//   per-record magic; `tag` is the record's sequence number.

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BadMagicError : public IoError {
public:
    using IoError::IoError;
};

class TruncatedFileError : public IoError {
public:
    using IoError::IoError;
};

class ShapeOverflowError : public IoError {
public:
    using IoError::IoError;
};

inline constexpr std::uint16_t kContainerVersion = 1;

/// Upper bound on rows*cols accepted from disk; anything larger is treated
/// as a corrupt header.
inline constexpr std::uint64_t kMaxCells = 1ull << 31;

struct StoredClip {
    Matrix frames;
    std::uint16_t label = 0;
};

void write_feature_clip(const std::string& path, const Matrix& frames, std::uint16_t label);
StoredClip read_feature_clip(const std::string& path);

struct Checkpoint {
    std::string config_json;
    std::vector<Matrix> tensors;
};

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace mclnn
