#pragma once

#include <cstdint>
#include <utility>

#include "tedk/params.hpp"
#include "tedk/rng.hpp"
#include "tedk/tensor.hpp"

namespace tedk {

// Where mixer inputs are tapped from a predictor: the feature map feeding its
// head, or the predicted depth map itself.
enum class FeatureLocation { Penultimate, Final };

FeatureLocation location_from_string(const std::string& s);
std::string location_to_string(FeatureLocation loc);

inline int location_channels(FeatureLocation loc, int feature_channels) {
    return loc == FeatureLocation::Penultimate ? feature_channels : 1;
}

struct PredictorArch {
    int depth = 2;  // hidden conv blocks
    int width = 8;
    int dilation = 1;
    ActivationKind activation = ActivationKind::Elu;
};

// Weight uniform in +-sqrt(1/fan_in) with fan_in = cin * 9, bias zero.
std::pair<Tensor, Tensor> init_conv3x3(int cout, int cin, Rng& rng);

// Small all-conv depth network: rgb -> hidden blocks -> feature map -> head.
// The head maps features to depth in (0, kappa) via kappa * sigmoid(conv).
struct ToyPredictor {
    PredictorArch arch;
    int feature_channels = 8;
    double kappa = 10.0;
    ParameterSet params;

    Tensor features(const Tensor& rgb) const;
    Tensor depth_from_features(const Tensor& feat) const;
    Tensor forward(const Tensor& rgb) const { return depth_from_features(features(rgb)); }
    Tensor features_at(FeatureLocation loc, const Tensor& rgb) const;
};

ToyPredictor build_toy_predictor(const PredictorArch& arch, int feature_channels, double kappa,
                                 std::uint64_t seed);

}  // namespace tedk
