#include "mclnn/feature_format.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace mclnn {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    put_u16(out, static_cast<std::uint16_t>(v & 0xFFFF));
    put_u16(out, static_cast<std::uint16_t>(v >> 16));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path);
        bytes_.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool at_end() const { return pos_ == bytes_.size(); }

    void expect_magic(const char* magic) {
        if (remaining() < 4) throw TruncatedFileError(path_ + ": truncated before magic");
        if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
            throw BadMagicError(path_ + ": bad magic, expected \"" + magic + "\"");
        }
        pos_ += 4;
    }

    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(
            static_cast<unsigned char>(bytes_[pos_]) |
            (static_cast<unsigned char>(bytes_[pos_ + 1]) << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32() {
        const std::uint32_t lo = u16();
        const std::uint32_t hi = u16();
        return lo | (hi << 16);
    }

    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string text(std::size_t length) {
        need(length);
        std::string out(bytes_.data() + pos_, length);
        pos_ += length;
        return out;
    }

    const std::string& path() const { return path_; }

private:
    void need(std::size_t count) {
        if (remaining() < count) {
            throw TruncatedFileError(path_ + ": truncated at byte " + std::to_string(pos_));
        }
    }

    std::string path_;
    std::string bytes_;
    std::size_t pos_ = 0;
};

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

void put_payload(std::string& out, const Matrix& m) {
    for (double v : m.values()) put_f32(out, static_cast<float>(v));
}

Matrix read_payload(Reader& reader, std::uint32_t rows, std::uint32_t cols) {
    const std::uint64_t cells = static_cast<std::uint64_t>(rows) * cols;
    if (cells > kMaxCells) {
        throw ShapeOverflowError(reader.path() + ": header claims " + std::to_string(rows) +
                                 "x" + std::to_string(cols) + " cells");
    }
    Matrix m(rows, cols);
    for (double& v : m.values()) {
        const float f = reader.f32();
        if (!std::isfinite(f)) {
            throw IoError(reader.path() + ": non-finite value in payload");
        }
        v = static_cast<double>(f);
    }
    return m;
}

}  // namespace

void write_feature_clip(const std::string& path, const Matrix& frames, std::uint16_t label) {
    std::string out;
    out.reserve(16 + frames.size() * 4);
    out += "MCLN";
    put_u16(out, kContainerVersion);
    put_u32(out, static_cast<std::uint32_t>(frames.rows()));
    put_u32(out, static_cast<std::uint32_t>(frames.cols()));
    put_u16(out, label);
    put_u16(out, 0);
    put_payload(out, frames);
    write_file(path, out);
}

StoredClip read_feature_clip(const std::string& path) {
    Reader reader(path);
    reader.expect_magic("MCLN");
    const std::uint16_t version = reader.u16();
    if (version != kContainerVersion) {
        throw IoError(path + ": unsupported container version " + std::to_string(version));
    }
    const std::uint32_t rows = reader.u32();
    const std::uint32_t cols = reader.u32();
    StoredClip clip;
    clip.label = reader.u16();
    reader.u16();   // reserved
    clip.frames = read_payload(reader, rows, cols);
    if (!reader.at_end()) {
        throw IoError(path + ": trailing bytes after payload");
    }
    return clip;
}

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    std::string out;
    out += "MCLW";
    put_u16(out, kContainerVersion);
    put_u16(out, 0);
    put_u32(out, static_cast<std::uint32_t>(checkpoint.config_json.size()));
    out += checkpoint.config_json;
    for (std::size_t i = 0; i < checkpoint.tensors.size(); ++i) {
        const Matrix& t = checkpoint.tensors[i];
        put_u32(out, static_cast<std::uint32_t>(t.rows()));
        put_u32(out, static_cast<std::uint32_t>(t.cols()));
        put_u16(out, static_cast<std::uint16_t>(i));
        put_u16(out, 0);
        put_payload(out, t);
    }
    write_file(path, out);
}

Checkpoint read_checkpoint(const std::string& path) {
    Reader reader(path);
    reader.expect_magic("MCLW");
    const std::uint16_t version = reader.u16();
    if (version != kContainerVersion) {
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    reader.u16();   // reserved
    const std::uint32_t json_length = reader.u32();
    Checkpoint checkpoint;
    checkpoint.config_json = reader.text(json_length);
    while (!reader.at_end()) {
        const std::uint32_t rows = reader.u32();
        const std::uint32_t cols = reader.u32();
        const std::uint16_t tag = reader.u16();
        reader.u16();   // reserved
        if (tag != checkpoint.tensors.size()) {
            throw IoError(path + ": tensor record " + std::to_string(checkpoint.tensors.size()) +
                          " carries tag " + std::to_string(tag));
        }
        checkpoint.tensors.push_back(read_payload(reader, rows, cols));
    }
    return checkpoint;
}

}  // namespace mclnn
