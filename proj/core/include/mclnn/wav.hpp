#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mclnn {

/// Mono audio normalized to [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    std::uint32_t sample_rate = 0;
};

/// Reads a RIFF/WAVE file holding 16-bit little-endian PCM. Multi-channel
/// input is downmixed by averaging. Any sample rate is accepted.
AudioBuffer read_wav(const std::string& path);

/// Writes mono 16-bit PCM; samples are clamped to [-1, 1] and rounded.
void write_wav(const std::string& path, const std::vector<double>& samples,
               std::uint32_t sample_rate);

}  // namespace mclnn
