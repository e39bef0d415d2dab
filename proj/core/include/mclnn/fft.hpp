#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mclnn {

/// Iterative radix-2 transform with twiddles precomputed at construction.
/// Forward is the unnormalized DFT; inverse applies the 1/N scaling.
/// Lengths must be powers of two, at least 2.
class Fft {
public:
    explicit Fft(std::size_t length);

    std::size_t length() const { return n_; }

    void forward(std::vector<std::complex<double>>& x) const;
    void inverse(std::vector<std::complex<double>>& x) const;

private:
    void run(std::vector<std::complex<double>>& x, bool invert) const;

    std::size_t n_;
    std::vector<std::complex<double>> twiddles_;     // exp(-2*pi*i*k/N), k < N/2
    std::vector<std::size_t> bit_reverse_;
};

std::vector<std::complex<double>> fft(std::vector<std::complex<double>> x);
std::vector<std::complex<double>> ifft(std::vector<std::complex<double>> x);

/// Spectrum of a real signal, bins 0..N/2 inclusive. Packs the even/odd
/// samples into a half-length complex transform and unpacks afterwards.
std::vector<std::complex<double>> rfft(std::span<const double> x);

bool is_power_of_two(std::size_t n);

}  // namespace mclnn
