#include "tedk/mixer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tedk {

MixerKind mixer_from_string(const std::string& s) {
    if (s == "uwf") return MixerKind::UWF;
    if (s == "cgf") return MixerKind::CGF;
    if (s == "cbf") return MixerKind::CBF;
    if (s == "rbf") return MixerKind::RBF;
    throw std::invalid_argument("unknown mixer kind: " + s);
}

std::string mixer_to_string(MixerKind k) {
    switch (k) {
        case MixerKind::UWF: return "uwf";
        case MixerKind::CGF: return "cgf";
        case MixerKind::CBF: return "cbf";
        case MixerKind::RBF: return "rbf";
    }
    throw std::invalid_argument("bad mixer kind");
}

const std::vector<MixerKind>& all_mixer_kinds() {
    static const std::vector<MixerKind> kinds{MixerKind::UWF, MixerKind::CGF, MixerKind::CBF,
                                              MixerKind::RBF};
    return kinds;
}

std::vector<int> rank_predictors(const std::vector<double>& rmse) {
    std::vector<int> order(rmse.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rmse[a] > rmse[b]; });
    return order;
}

namespace {

void check_feats(const MixerModel& m, const std::vector<Tensor>& feats) {
    if (static_cast<int>(feats.size()) != m.num_predictors) {
        throw std::invalid_argument("mixer expects " + std::to_string(m.num_predictors) +
                                    " feature maps, got " + std::to_string(feats.size()));
    }
    for (const auto& f : feats) {
        const Shape& s = f.shape();
        if (s.size() != 4 || s[1] != m.feature_channels || s != feats[0].shape()) {
            throw std::invalid_argument("mixer feature shape mismatch: " + shape_str(s));
        }
    }
}

}  // namespace

Tensor MixerModel::fuse(const std::vector<Tensor>& feats) const {
    check_feats(*this, feats);
    switch (kind) {
        case MixerKind::UWF:
            return sum_sorted(feats);
        case MixerKind::CGF: {
            Tensor acc;
            for (int i = 0; i < num_predictors; ++i) {
                std::string p = "conf" + std::to_string(i);
                auto gate = conv2d_3x3(feats[i], params.get(p + ".weight"), params.get(p + ".bias"))
                                .sigmoid();
                auto term = gate * feats[i];
                acc = acc.defined() ? acc + term : term;
            }
            return acc;
        }
        case MixerKind::CBF: {
            auto cat = concat_channels(feats);
            return conv2d_3x3(cat, params.get("fuse.weight"), params.get("fuse.bias")).elu();
        }
        case MixerKind::RBF: {
            if (static_cast<int>(order.size()) != num_predictors) {
                throw std::invalid_argument("rbf mixer needs a visit order of length " +
                                            std::to_string(num_predictors));
            }
            const Shape& s = feats[0].shape();
            Tensor h = Tensor::zeros({s[0], feature_channels, s[2], s[3]});
            std::vector<Tensor> states;
            states.reserve(order.size());
            for (int idx : order) {
                const Tensor& f = feats.at(static_cast<std::size_t>(idx));
                auto hf = concat_channels({h, f});
                auto z = conv2d_3x3(hf, params.get("gate_z.weight"), params.get("gate_z.bias")).sigmoid();
                auto sgate = conv2d_3x3(hf, params.get("gate_s.weight"), params.get("gate_s.bias")).sigmoid();
                auto cand_in = concat_channels({sgate * h, f});
                auto cand = conv2d_3x3(cand_in, params.get("cand.weight"), params.get("cand.bias")).tanh();
                h = (z.affine(-1.0, 1.0) * h) + (z * cand);
                states.push_back(h);
            }
            return concat_channels(states);
        }
    }
    throw std::invalid_argument("bad mixer kind");
}

Tensor MixerModel::forward(const std::vector<Tensor>& feats) const {
    auto fused = fuse(feats);
    auto y = conv2d_3x3(fused, params.get("head.weight"), params.get("head.bias"));
    return y.sigmoid().scale(kappa);
}

MixerModel build_mixer(MixerKind kind, FeatureLocation location, int num_predictors,
                       int feature_channels, double kappa, std::uint64_t seed) {
    if (num_predictors < 1 || feature_channels < 1) {
        throw std::invalid_argument("mixer needs at least one predictor and one channel");
    }
    MixerModel m;
    m.kind = kind;
    m.location = location;
    m.num_predictors = num_predictors;
    m.feature_channels = feature_channels;
    m.kappa = kappa;
    Rng rng(seed);
    switch (kind) {
        case MixerKind::UWF:
            break;
        case MixerKind::CGF:
            for (int i = 0; i < num_predictors; ++i) {
                auto [w, b] = init_conv3x3(feature_channels, feature_channels, rng);
                std::string p = "conf" + std::to_string(i);
                m.params.add(p + ".weight", w);
                m.params.add(p + ".bias", b);
            }
            break;
        case MixerKind::CBF: {
            auto [w, b] = init_conv3x3(feature_channels, num_predictors * feature_channels, rng);
            m.params.add("fuse.weight", w);
            m.params.add("fuse.bias", b);
            break;
        }
        case MixerKind::RBF: {
            m.order.resize(static_cast<std::size_t>(num_predictors));
            std::iota(m.order.begin(), m.order.end(), 0);
            for (const char* name : {"gate_z", "gate_s", "cand"}) {
                auto [w, b] = init_conv3x3(feature_channels, 2 * feature_channels, rng);
                m.params.add(std::string(name) + ".weight", w);
                m.params.add(std::string(name) + ".bias", b);
            }
            break;
        }
    }
    auto [hw, hb] = init_conv3x3(1, m.fused_channels(), rng);
    m.params.add("head.weight", hw);
    m.params.add("head.bias", hb);
    return m;
}

}  // namespace tedk
