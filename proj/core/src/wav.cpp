#include "mclnn/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mclnn {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_wav: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw std::runtime_error("read_wav: " + path + " is not a RIFF/WAVE file");
    }

    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t chunk_size = read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) {
            throw std::runtime_error("read_wav: truncated chunk in " + path);
        }
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw std::runtime_error("read_wav: short fmt chunk in " + path);
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            sample_rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = chunk_size;
        }
        pos = body + chunk_size + (chunk_size & 1);   // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr) {
        throw std::runtime_error("read_wav: missing fmt or data chunk in " + path);
    }
    if (format != 1) {
        throw std::runtime_error("read_wav: " + path + " uses format tag " +
                                 std::to_string(format) + ", only PCM (1) is supported");
    }
    if (bits != 16) {
        throw std::runtime_error("read_wav: " + path + " has " + std::to_string(bits) +
                                 "-bit samples, only 16-bit PCM is supported");
    }
    if (channels == 0 || sample_rate == 0) {
        throw std::runtime_error("read_wav: invalid fmt fields in " + path);
    }

    const std::size_t frame_bytes = 2u * channels;
    const std::size_t frames = data_size / frame_bytes;
    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* s = data + f * frame_bytes + 2u * c;
            const std::int16_t v = static_cast<std::int16_t>(s[0] | (s[1] << 8));
            acc += static_cast<double>(v);
        }
        out.samples[f] = acc / (32768.0 * channels);
    }
    return out;
}

void write_wav(const std::string& path, const std::vector<double>& samples,
               std::uint32_t sample_rate) {
    const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
    std::string out;
    out.reserve(44 + data_size);
    out += "RIFF";
    put_u32(out, 36 + data_size);
    out += "WAVE";
    out += "fmt ";
    put_u32(out, 16);
    put_u16(out, 1);               // PCM
    put_u16(out, 1);               // mono
    put_u32(out, sample_rate);
    put_u32(out, sample_rate * 2); // byte rate
    put_u16(out, 2);               // block align
    put_u16(out, 16);              // bits per sample
    out += "data";
    put_u32(out, data_size);
    for (double v : samples) {
        const double clamped = std::clamp(v, -1.0, 1.0);
        const auto s = static_cast<std::int16_t>(std::lrint(clamped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(s));
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("write_wav: cannot open " + path + " for writing");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw std::runtime_error("write_wav: short write to " + path);
}

}  // namespace mclnn
