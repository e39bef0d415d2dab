#include "mclnn/fft.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace mclnn {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

Fft::Fft(std::size_t length) : n_(length) {
    if (!is_power_of_two(n_)) {
        throw std::invalid_argument("Fft: length " + std::to_string(n_) +
                                    " is not a power of two >= 2");
    }
    twiddles_.resize(n_ / 2);
    for (std::size_t k = 0; k < n_ / 2; ++k) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                             static_cast<double>(n_);
        twiddles_[k] = {std::cos(angle), std::sin(angle)};
    }
    bit_reverse_.resize(n_);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n_) ++bits;
    for (std::size_t i = 0; i < n_; ++i) {
        std::size_t rev = 0;
        for (std::size_t b = 0; b < bits; ++b) {
            if (i & (std::size_t{1} << b)) rev |= std::size_t{1} << (bits - 1 - b);
        }
        bit_reverse_[i] = rev;
    }
}

void Fft::run(std::vector<std::complex<double>>& x, bool invert) const {
    if (x.size() != n_) {
        throw std::invalid_argument("Fft: input length " + std::to_string(x.size()) +
                                    " does not match plan length " + std::to_string(n_));
    }
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j = bit_reverse_[i];
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
        const std::size_t stride = n_ / len;
        const std::size_t half = len / 2;
        for (std::size_t start = 0; start < n_; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                std::complex<double> w = twiddles_[k * stride];
                if (invert) w = std::conj(w);
                const std::complex<double> a = x[start + k];
                const std::complex<double> b = x[start + k + half] * w;
                x[start + k] = a + b;
                x[start + k + half] = a - b;
            }
        }
    }
    if (invert) {
        const double scale = 1.0 / static_cast<double>(n_);
        for (auto& v : x) v *= scale;
    }
}

void Fft::forward(std::vector<std::complex<double>>& x) const { run(x, false); }
void Fft::inverse(std::vector<std::complex<double>>& x) const { run(x, true); }

std::vector<std::complex<double>> fft(std::vector<std::complex<double>> x) {
    Fft plan(x.size());
    plan.forward(x);
    return x;
}

std::vector<std::complex<double>> ifft(std::vector<std::complex<double>> x) {
    Fft plan(x.size());
    plan.inverse(x);
    return x;
}

std::vector<std::complex<double>> rfft(std::span<const double> x) {
    const std::size_t n = x.size();
    if (!is_power_of_two(n)) {
        throw std::invalid_argument("rfft: length " + std::to_string(n) +
                                    " is not a power of two >= 2");
    }
    const std::size_t half = n / 2;

    // z[k] = x[2k] + i*x[2k+1], transformed at half length.
    std::vector<std::complex<double>> z(half);
    for (std::size_t k = 0; k < half; ++k) {
        z[k] = {x[2 * k], x[2 * k + 1]};
    }
    if (half == 1) {
        // Single packed bin: X[0] and X[1] follow directly.
        const double even = z[0].real();
        const double odd = z[0].imag();
        return {{even + odd, 0.0}, {even - odd, 0.0}};
    }
    Fft plan(half);
    plan.forward(z);

    std::vector<std::complex<double>> spectrum(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        const std::size_t k1 = k % half;
        const std::size_t k2 = (half - k) % half;
        const std::complex<double> zk = z[k1];
        const std::complex<double> zc = std::conj(z[k2]);
        const std::complex<double> even = 0.5 * (zk + zc);
        const std::complex<double> odd = std::complex<double>(0.0, -0.5) * (zk - zc);
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                             static_cast<double>(n);
        const std::complex<double> w{std::cos(angle), std::sin(angle)};
        spectrum[k] = even + w * odd;
    }
    return spectrum;
}

}  // namespace mclnn
