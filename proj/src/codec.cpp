#include "tedk/codec.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "tedk/util.hpp"

namespace tedk {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t offset,
                             const std::string& what) {
    throw std::runtime_error(path.string() + ": parse error at byte " + std::to_string(offset) +
                             ": " + what);
}

// Reads one whitespace-terminated token, skipping '#' comment lines.
std::string next_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                       const std::filesystem::path& path) {
    auto is_space = [](std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (pos < bytes.size()) {
        if (is_space(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size()) parse_fail(path, pos, "unexpected end of header");
    std::size_t start = pos;
    while (pos < bytes.size() && !is_space(bytes[pos])) ++pos;
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes.begin() + static_cast<std::ptrdiff_t>(pos));
}

int parse_int(const std::string& tok, const std::filesystem::path& path, std::size_t pos) {
    try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        parse_fail(path, pos, "expected integer, got '" + tok + "'");
    }
}

void check_image_shape(const Tensor& image, int channels, const char* what) {
    const Shape& s = image.shape();
    if (s.size() != 3 || s[0] != channels || s[1] < 1 || s[2] < 1) {
        throw std::invalid_argument(std::string(what) + " expects [" + std::to_string(channels) +
                                    ",H,W], got " + shape_str(s));
    }
}

float byteswap_f32(float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    u = ((u & 0xFF000000u) >> 24) | ((u & 0x00FF0000u) >> 8) |
        ((u & 0x0000FF00u) << 8) | ((u & 0x000000FFu) << 24);
    std::memcpy(&v, &u, 4);
    return v;
}

constexpr bool host_little_endian = std::endian::native == std::endian::little;

}  // namespace

void write_pfm(const std::filesystem::path& path, const Tensor& image) {
    const Shape& s = image.shape();
    if (s.size() != 3 || (s[0] != 1 && s[0] != 3)) {
        throw std::invalid_argument("write_pfm expects [1|3,H,W], got " + shape_str(s));
    }
    const int C = s[0], H = s[1], W = s[2];
    for (double v : image.data()) {
        if (!std::isfinite(v)) throw std::invalid_argument("write_pfm: non-finite value");
    }
    std::string out = (C == 1 ? "Pf\n" : "PF\n");
    out += std::to_string(W) + " " + std::to_string(H) + "\n-1.0\n";
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::size_t off = out.size();
    out.resize(off + plane * C * 4);
    for (int y = H - 1; y >= 0; --y) {
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < C; ++c) {
                float f = static_cast<float>(image.data()[c * plane + static_cast<std::size_t>(y) * W + x]);
                if (!host_little_endian) f = byteswap_f32(f);
                std::memcpy(out.data() + off, &f, 4);
                off += 4;
            }
        }
    }
    write_file_text(path, out);
}

Tensor read_pfm(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    std::size_t pos = 0;
    std::string magic = next_token(bytes, pos, path);
    if (magic != "Pf" && magic != "PF") parse_fail(path, 0, "bad magic '" + magic + "'");
    const int C = magic == "Pf" ? 1 : 3;
    std::size_t dim_pos = pos;
    int W = parse_int(next_token(bytes, pos, path), path, dim_pos);
    dim_pos = pos;
    int H = parse_int(next_token(bytes, pos, path), path, dim_pos);
    if (W < 1 || H < 1) parse_fail(path, dim_pos, "non-positive dimensions");
    std::size_t scale_pos = pos;
    double scale;
    try {
        scale = std::stod(next_token(bytes, pos, path));
    } catch (const std::exception&) {
        parse_fail(path, scale_pos, "bad scale line");
    }
    if (scale == 0.0) parse_fail(path, scale_pos, "zero scale");
    ++pos;  // single whitespace byte after the scale line
    const bool file_little = scale < 0.0;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    if (bytes.size() - pos < plane * C * 4) {
        parse_fail(path, bytes.size(), "truncated pixel data");
    }
    std::vector<double> data(plane * C);
    std::size_t off = pos;
    for (int y = H - 1; y >= 0; --y) {
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < C; ++c) {
                float f;
                std::memcpy(&f, bytes.data() + off, 4);
                off += 4;
                if (file_little != host_little_endian) f = byteswap_f32(f);
                data[c * plane + static_cast<std::size_t>(y) * W + x] = static_cast<double>(f);
            }
        }
    }
    return Tensor::from_data({C, H, W}, std::move(data));
}

namespace {

void write_netpbm(const std::filesystem::path& path, const Tensor& image, int maxval,
                  const char* magic, const std::string& comment) {
    if (maxval != 255 && maxval != 65535) {
        throw std::invalid_argument("netpbm maxval must be 255 or 65535");
    }
    const Shape& s = image.shape();
    const int C = s[0], H = s[1], W = s[2];
    for (double v : image.data()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument(std::string(magic) + ": value " + format_float(v) +
                                        " not representable in [0,1]");
        }
    }
    std::string out = std::string(magic) + "\n";
    out += comment;
    out += std::to_string(W) + " " + std::to_string(H) + "\n" + std::to_string(maxval) + "\n";
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < C; ++c) {
            std::uint16_t q = quantize_unit(image.data()[c * plane + i], maxval);
            if (maxval == 255) {
                out.push_back(static_cast<char>(q));
            } else {
                out.push_back(static_cast<char>(q >> 8));  // big-endian per the format
                out.push_back(static_cast<char>(q & 0xFF));
            }
        }
    }
    write_file_text(path, out);
}

struct NetpbmFile {
    int channels, height, width, maxval;
    std::vector<std::uint16_t> values;  // interleaved
    double comment_scale = 0.0;         // from "# scale <v>" if present
};

NetpbmFile read_netpbm(const std::filesystem::path& path, const char* want_magic) {
    auto bytes = read_file_bytes(path);
    std::size_t pos = 0;
    std::string magic = next_token(bytes, pos, path);
    if (magic != want_magic) {
        parse_fail(path, 0, "bad magic '" + magic + "', want '" + std::string(want_magic) + "'");
    }
    NetpbmFile f;
    f.channels = magic == "P6" ? 3 : 1;
    // scan comments for a scale annotation before consuming the dims
    for (std::size_t i = pos; i + 8 < bytes.size() && i < pos + 256; ++i) {
        if (bytes[i] == '#') {
            std::string line;
            for (std::size_t j = i + 1; j < bytes.size() && bytes[j] != '\n'; ++j) {
                line.push_back(static_cast<char>(bytes[j]));
            }
            auto k = line.find("scale ");
            if (k != std::string::npos) f.comment_scale = std::stod(line.substr(k + 6));
            break;
        }
        if (bytes[i] != ' ' && bytes[i] != '\n' && bytes[i] != '\r' && bytes[i] != '\t') break;
    }
    std::size_t dim_pos = pos;
    f.width = parse_int(next_token(bytes, pos, path), path, dim_pos);
    dim_pos = pos;
    f.height = parse_int(next_token(bytes, pos, path), path, dim_pos);
    dim_pos = pos;
    f.maxval = parse_int(next_token(bytes, pos, path), path, dim_pos);
    if (f.maxval != 255 && f.maxval != 65535) parse_fail(path, dim_pos, "unsupported maxval");
    if (f.width < 1 || f.height < 1) parse_fail(path, dim_pos, "non-positive dimensions");
    ++pos;  // single whitespace after maxval
    const std::size_t count = static_cast<std::size_t>(f.width) * f.height * f.channels;
    const int bpv = f.maxval == 255 ? 1 : 2;
    if (bytes.size() - pos < count * static_cast<std::size_t>(bpv)) {
        parse_fail(path, bytes.size(), "truncated pixel data");
    }
    f.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (bpv == 1) {
            f.values[i] = bytes[pos + i];
        } else {
            f.values[i] = static_cast<std::uint16_t>((bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1]);
        }
    }
    return f;
}

Tensor netpbm_to_tensor(const NetpbmFile& f) {
    const std::size_t plane = static_cast<std::size_t>(f.height) * f.width;
    std::vector<double> data(plane * static_cast<std::size_t>(f.channels));
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < f.channels; ++c) {
            data[static_cast<std::size_t>(c) * plane + i] =
                static_cast<double>(f.values[i * static_cast<std::size_t>(f.channels) + static_cast<std::size_t>(c)]) / f.maxval;
        }
    }
    return Tensor::from_data({f.channels, f.height, f.width}, std::move(data));
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Tensor& rgb, int maxval) {
    check_image_shape(rgb, 3, "write_ppm");
    write_netpbm(path, rgb, maxval, "P6", "");
}

Tensor read_ppm(const std::filesystem::path& path) {
    return netpbm_to_tensor(read_netpbm(path, "P6"));
}

void write_pgm(const std::filesystem::path& path, const Tensor& gray, int maxval) {
    check_image_shape(gray, 1, "write_pgm");
    write_netpbm(path, gray, maxval, "P5", "");
}

Tensor read_pgm(const std::filesystem::path& path) {
    return netpbm_to_tensor(read_netpbm(path, "P5"));
}

void write_depth_pgm16(const std::filesystem::path& path, const Tensor& depth, double scale) {
    check_image_shape(depth, 1, "write_depth_pgm16");
    if (scale <= 0.0) throw std::invalid_argument("depth scale must be positive");
    std::vector<double> unit(depth.numel());
    for (std::size_t i = 0; i < unit.size(); ++i) {
        double scaled = depth.data()[i] * scale;
        if (scaled < 0.0 || std::floor(scaled + 0.5) > 65535.0) {
            throw std::invalid_argument("depth value " + format_float(depth.data()[i]) +
                                        " not representable at scale " + format_float(scale));
        }
        unit[i] = scaled / 65535.0;
    }
    auto t = Tensor::from_data(depth.shape(), std::move(unit));
    write_netpbm(path, t, 65535, "P5", "# scale " + format_float(scale) + "\n");
}

std::pair<Tensor, double> read_depth_pgm16(const std::filesystem::path& path) {
    auto f = read_netpbm(path, "P5");
    if (f.maxval != 65535) parse_fail(path, 0, "depth pgm must be 16-bit");
    if (f.comment_scale <= 0.0) parse_fail(path, 0, "missing depth scale comment");
    const std::size_t plane = static_cast<std::size_t>(f.height) * f.width;
    std::vector<double> data(plane);
    for (std::size_t i = 0; i < plane; ++i) {
        data[i] = static_cast<double>(f.values[i]) / f.comment_scale;
    }
    return {Tensor::from_data({1, f.height, f.width}, std::move(data)), f.comment_scale};
}

}  // namespace tedk
