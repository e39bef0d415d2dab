#pragma once

#include <cstdint>
#include <vector>

#include "mclnn/matrix.hpp"
#include "mclnn/wav.hpp"

namespace mclnn {

struct StftConfig {
    std::size_t n_fft = 2048;
    std::size_t hop = 1024;
};

/// Magnitude spectrogram with a periodic Hann window, frames down the rows,
/// bins 0..n_fft/2 across the columns. Frame count is
/// floor((N - n_fft) / hop) + 1; audio shorter than one frame is rejected.
Matrix stft_magnitude(const AudioBuffer& audio, const StftConfig& config = {});

/// HTK-style mel scale: mel(f) = 2595 * log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterbank {
    Matrix filters;                        // n_mels x (1 + n_fft/2), nonnegative
    std::vector<double> band_edges_hz;     // n_mels + 2 points, strictly increasing
};

/// Triangular filters with centers equally spaced on the mel scale between
/// f_min and f_max (f_max = sr/2 when zero). Rejects parameter combinations
/// the FFT grid cannot carry at all; low-frequency filters narrower than one
/// bin are permitted and come out empty, as in mainstream implementations.
MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t n_fft, std::uint32_t sample_rate,
                             double f_min = 0.0, double f_max = 0.0);

inline constexpr double kLogMelFloor = 1e-10;

/// Natural log of the filterbank projection, floored at kLogMelFloor.
Matrix log_mel(const Matrix& spectrogram, const MelFilterbank& fb);

/// stft_magnitude + mel + log, the standard frontend in one call.
Matrix log_mel_spectrogram(const AudioBuffer& audio, std::size_t n_mels,
                           const StftConfig& config = {});

}  // namespace mclnn
