#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tedk/params.hpp"
#include "tedk/predictor.hpp"
#include "tedk/tensor.hpp"

namespace tedk {

enum class MixerKind { UWF, CGF, CBF, RBF };

MixerKind mixer_from_string(const std::string& s);
std::string mixer_to_string(MixerKind k);
const std::vector<MixerKind>& all_mixer_kinds();

// Visit order for the recurrent mixer: least accurate predictor first, most
// accurate last, ties broken by ascending index.
std::vector<int> rank_predictors(const std::vector<double>& rmse);

// Fuses K same-shape feature maps into one map and decodes it to depth.
//   UWF: F = sum_i f_i, computed order-independently down to the bit.
//   CGF: F = sum_i sigmoid(conv_i(f_i)) * f_i, one gate conv per input slot.
//   CBF: F = elu(conv([f_1..f_K])) on the channel concat.
//   RBF: conv-GRU over the inputs in `order`; F = concat of the hidden states.
// Depth head on top of F: kappa * sigmoid(conv(F)).
struct MixerModel {
    MixerKind kind = MixerKind::UWF;
    FeatureLocation location = FeatureLocation::Penultimate;
    int num_predictors = 0;
    int feature_channels = 0;  // channels per input map
    double kappa = 10.0;
    std::vector<int> order;    // RBF only
    ParameterSet params;

    int fused_channels() const {
        return kind == MixerKind::RBF ? num_predictors * feature_channels : feature_channels;
    }

    Tensor fuse(const std::vector<Tensor>& feats) const;
    Tensor forward(const std::vector<Tensor>& feats) const;
};

MixerModel build_mixer(MixerKind kind, FeatureLocation location, int num_predictors,
                       int feature_channels, double kappa, std::uint64_t seed);

}  // namespace tedk
