#include "tedk/dataset.hpp"

#include <algorithm>
#include <stdexcept>

#include "tedk/codec.hpp"
#include "tedk/rng.hpp"
#include "tedk/util.hpp"

namespace tedk {

void validate_sample(const DepthSample& s) {
    const Shape& rs = s.rgb.shape();
    if (rs.size() != 3 || rs[0] != 3) {
        throw std::invalid_argument("sample " + s.id + ": rgb must be [3,H,W]");
    }
    Shape want{1, rs[1], rs[2]};
    if (s.depth.shape() != want || s.mask.shape() != want) {
        throw std::invalid_argument("sample " + s.id + ": depth/mask must be [1,H,W] matching rgb");
    }
    for (double v : s.rgb.data()) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("sample " + s.id + ": rgb outside [0,1]");
    }
    for (std::size_t i = 0; i < s.depth.numel(); ++i) {
        double d = s.depth.data()[i];
        double m = s.mask.data()[i];
        if (d < 0.0) throw std::invalid_argument("sample " + s.id + ": negative depth");
        if ((d > 0.0) != (m != 0.0)) {
            throw std::invalid_argument("sample " + s.id + ": mask must be exactly depth > 0");
        }
    }
}

DatasetSplit split_dataset(const std::vector<DepthSample>& samples, std::uint64_t seed) {
    const std::size_t n = samples.size();
    if (n < 8) {
        throw std::invalid_argument("split_dataset needs at least 8 samples, got " + std::to_string(n));
    }
    std::vector<std::string> ids;
    ids.reserve(n);
    for (const auto& s : samples) ids.push_back(s.id);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(ids[i - 1], ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    }
    const std::size_t mixer_n = n / 8;
    DatasetSplit split;
    split.train_mixer.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(mixer_n));
    split.train_base.assign(ids.begin() + static_cast<std::ptrdiff_t>(mixer_n), ids.end());
    return split;
}

void save_dataset(const std::filesystem::path& root, const std::vector<DepthSample>& samples) {
    std::filesystem::create_directories(root);
    std::string manifest;
    for (const auto& s : samples) {
        validate_sample(s);
        write_ppm(root / (s.id + ".rgb.ppm"), s.rgb);
        write_pfm(root / (s.id + ".depth.pfm"), s.depth);
        manifest += s.id;
        manifest += '\n';
    }
    write_file_text(root / "manifest.txt", manifest);
}

std::vector<DepthSample> load_dataset(const std::filesystem::path& root) {
    auto manifest = read_file_text(root / "manifest.txt");
    std::vector<DepthSample> samples;
    std::size_t start = 0;
    while (start < manifest.size()) {
        std::size_t end = manifest.find('\n', start);
        if (end == std::string::npos) end = manifest.size();
        std::string id = manifest.substr(start, end - start);
        start = end + 1;
        if (id.empty()) continue;
        DepthSample s;
        s.id = id;
        s.rgb = read_ppm(root / (id + ".rgb.ppm"));
        s.depth = read_pfm(root / (id + ".depth.pfm"));
        std::vector<double> m(s.depth.numel());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = s.depth.data()[i] > 0.0 ? 1.0 : 0.0;
        s.mask = Tensor::from_data(s.depth.shape(), std::move(m));
        validate_sample(s);
        samples.push_back(std::move(s));
    }
    return samples;
}

const DepthSample& sample_by_id(const std::vector<DepthSample>& samples, const std::string& id) {
    auto it = std::find_if(samples.begin(), samples.end(),
                           [&](const DepthSample& s) { return s.id == id; });
    if (it == samples.end()) throw std::out_of_range("no sample with id " + id);
    return *it;
}

}  // namespace tedk
