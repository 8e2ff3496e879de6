#include "tedk/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "tedk/util.hpp"

namespace tedk {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) |
                          static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8 |
                          static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16 |
                          static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24;
        pos_ += 4;
        return v;
    }

    std::string string() {
        const std::uint32_t len = u32();
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw std::runtime_error("checkpoint: truncated file");
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParameterSet& params,
                                            const std::map<std::string, std::string>& metadata) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor& t = params.tensor_at(i);
        put_string(out, params.name_at(i));
        put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
        for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t.data()) put_f32(out, static_cast<float>(v));
    }
    put_u32(out, static_cast<std::uint32_t>(metadata.size()));
    for (const auto& [key, value] : metadata) {
        put_string(out, key);
        put_string(out, value);
    }
    return out;
}

LoadedCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic, expected TEDK");
    }
    const std::vector<std::uint8_t> tail(bytes.begin() + 4, bytes.end());
    Reader reader(tail);
    const std::uint32_t version = reader.u32();
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    LoadedCheckpoint ck;
    const std::uint32_t tensor_count = reader.u32();
    for (std::uint32_t i = 0; i < tensor_count; ++i) {
        const std::string name = reader.string();
        const std::uint32_t rank = reader.u32();
        Shape shape(rank);
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<int>(reader.u32());
            if (shape[d] <= 0) throw std::runtime_error("checkpoint: non-positive dimension");
            numel *= static_cast<std::size_t>(shape[d]);
        }
        std::vector<double> data(numel);
        for (std::size_t k = 0; k < numel; ++k) data[k] = static_cast<double>(reader.f32());
        ck.params.add(name, Tensor::from_data(std::move(shape), std::move(data)));
    }
    const std::uint32_t meta_count = reader.u32();
    for (std::uint32_t i = 0; i < meta_count; ++i) {
        std::string key = reader.string();
        std::string value = reader.string();
        if (!ck.metadata.emplace(std::move(key), std::move(value)).second) {
            throw std::runtime_error("checkpoint: duplicate metadata key");
        }
    }
    if (!reader.exhausted()) throw std::runtime_error("checkpoint: trailing bytes");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const std::map<std::string, std::string>& metadata) {
    const std::vector<std::uint8_t> bytes = encode_checkpoint(params, metadata);
    write_file_bytes(path, bytes.data(), bytes.size());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file_bytes(path));
}

}  // namespace tedk
