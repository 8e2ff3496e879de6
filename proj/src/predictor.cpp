#include "tedk/predictor.hpp"

#include <cmath>
#include <stdexcept>

namespace tedk {

FeatureLocation location_from_string(const std::string& s) {
    if (s == "penultimate") return FeatureLocation::Penultimate;
    if (s == "final") return FeatureLocation::Final;
    throw std::invalid_argument("unknown feature location: " + s);
}

std::string location_to_string(FeatureLocation loc) {
    return loc == FeatureLocation::Penultimate ? "penultimate" : "final";
}

std::pair<Tensor, Tensor> init_conv3x3(int cout, int cin, Rng& rng) {
    double bound = std::sqrt(1.0 / (9.0 * cin));
    std::vector<double> w(static_cast<std::size_t>(cout) * cin * 9);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    return {Tensor::from_data({cout, cin, 3, 3}, std::move(w), true),
            Tensor::zeros({cout}, true)};
}

Tensor ToyPredictor::features(const Tensor& rgb) const {
    if (rgb.shape().size() != 4 || rgb.shape()[1] != 3) {
        throw std::invalid_argument("predictor input must be [N,3,H,W], got " + shape_str(rgb.shape()));
    }
    Tensor h = rgb;
    for (int i = 0; i < arch.depth; ++i) {
        std::string p = "block" + std::to_string(i);
        h = conv2d_3x3(h, params.get(p + ".weight"), params.get(p + ".bias"), arch.dilation);
        h = apply_activation(arch.activation, h);
    }
    h = conv2d_3x3(h, params.get("feat.weight"), params.get("feat.bias"), arch.dilation);
    return apply_activation(arch.activation, h);
}

Tensor ToyPredictor::depth_from_features(const Tensor& feat) const {
    auto y = conv2d_3x3(feat, params.get("head.weight"), params.get("head.bias"));
    return y.sigmoid().scale(kappa);
}

Tensor ToyPredictor::features_at(FeatureLocation loc, const Tensor& rgb) const {
    return loc == FeatureLocation::Penultimate ? features(rgb) : forward(rgb);
}

ToyPredictor build_toy_predictor(const PredictorArch& arch, int feature_channels, double kappa,
                                 std::uint64_t seed) {
    if (arch.depth < 1 || arch.width < 1 || feature_channels < 1) {
        throw std::invalid_argument("predictor arch must have positive depth/width/channels");
    }
    ToyPredictor p;
    p.arch = arch;
    p.feature_channels = feature_channels;
    p.kappa = kappa;
    Rng rng(seed);
    int cin = 3;
    for (int i = 0; i < arch.depth; ++i) {
        auto [w, b] = init_conv3x3(arch.width, cin, rng);
        std::string name = "block" + std::to_string(i);
        p.params.add(name + ".weight", w);
        p.params.add(name + ".bias", b);
        cin = arch.width;
    }
    auto [fw, fb] = init_conv3x3(feature_channels, cin, rng);
    p.params.add("feat.weight", fw);
    p.params.add("feat.bias", fb);
    auto [hw, hb] = init_conv3x3(1, feature_channels, rng);
    p.params.add("head.weight", hw);
    p.params.add("head.bias", hb);
    return p;
}

}  // namespace tedk
