#include "mclnn/dsp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mclnn/fft.hpp"

namespace mclnn {

Matrix stft_magnitude(const AudioBuffer& audio, const StftConfig& config) {
    const std::size_t n_fft = config.n_fft;
    const std::size_t hop = config.hop;
    if (!is_power_of_two(n_fft)) {
        throw std::invalid_argument("stft_magnitude: n_fft " + std::to_string(n_fft) +
                                    " is not a power of two");
    }
    if (hop == 0) throw std::invalid_argument("stft_magnitude: hop must be >= 1");
    if (audio.samples.size() < n_fft) {
        throw std::invalid_argument("stft_magnitude: audio has " +
                                    std::to_string(audio.samples.size()) +
                                    " samples, shorter than one frame of " +
                                    std::to_string(n_fft));
    }
    const std::size_t frames = (audio.samples.size() - n_fft) / hop + 1;
    const std::size_t bins = n_fft / 2 + 1;

    // Periodic Hann window.
    std::vector<double> window(n_fft);
    for (std::size_t i = 0; i < n_fft; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(n_fft));
    }

    Matrix out(frames, bins);
    std::vector<double> slice(n_fft);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* src = audio.samples.data() + f * hop;
        for (std::size_t i = 0; i < n_fft; ++i) slice[i] = src[i] * window[i];
        const auto spectrum = rfft(slice);
        for (std::size_t k = 0; k < bins; ++k) out(f, k) = std::abs(spectrum[k]);
    }
    return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t n_fft, std::uint32_t sample_rate,
                             double f_min, double f_max) {
    if (n_mels < 1) throw std::invalid_argument("mel_filterbank: n_mels must be >= 1");
    if (sample_rate == 0) throw std::invalid_argument("mel_filterbank: sample_rate must be > 0");
    const double nyquist = sample_rate / 2.0;
    if (f_max == 0.0) f_max = nyquist;
    if (!(f_min < f_max) || f_max > nyquist) {
        throw std::invalid_argument("mel_filterbank: need f_min < f_max <= sample_rate/2");
    }
    const std::size_t bins = n_fft / 2 + 1;
    if (n_mels + 2 > bins) {
        throw std::invalid_argument("mel_filterbank: " + std::to_string(n_mels) +
                                    " mel bands is too many for " + std::to_string(bins) +
                                    " FFT bins");
    }

    MelFilterbank fb;
    fb.band_edges_hz.resize(n_mels + 2);
    const double mel_lo = hz_to_mel(f_min);
    const double mel_hi = hz_to_mel(f_max);
    for (std::size_t m = 0; m < n_mels + 2; ++m) {
        const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(m) /
                                        static_cast<double>(n_mels + 1);
        fb.band_edges_hz[m] = mel_to_hz(mel);
    }

    fb.filters = Matrix(n_mels, bins);
    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n_fft);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double left = fb.band_edges_hz[m];
        const double center = fb.band_edges_hz[m + 1];
        const double right = fb.band_edges_hz[m + 2];
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = bin_hz * static_cast<double>(k);
            double w = 0.0;
            if (f > left && f < right) {
                w = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
            }
            fb.filters(m, k) = w;
        }
    }
    return fb;
}

Matrix log_mel(const Matrix& spectrogram, const MelFilterbank& fb) {
    if (spectrogram.cols() != fb.filters.cols()) {
        throw std::invalid_argument("log_mel: spectrogram has " +
                                    std::to_string(spectrogram.cols()) +
                                    " bins, filterbank expects " +
                                    std::to_string(fb.filters.cols()));
    }
    Matrix out = matmul(spectrogram, transpose(fb.filters));
    for (double& v : out.values()) v = std::log(v + kLogMelFloor);
    return out;
}

Matrix log_mel_spectrogram(const AudioBuffer& audio, std::size_t n_mels,
                           const StftConfig& config) {
    const Matrix spec = stft_magnitude(audio, config);
    const MelFilterbank fb = mel_filterbank(n_mels, config.n_fft, audio.sample_rate);
    return log_mel(spec, fb);
}

}  // namespace mclnn
