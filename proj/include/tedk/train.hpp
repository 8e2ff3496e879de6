#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tedk/dataset.hpp"
#include "tedk/loss.hpp"
#include "tedk/metrics.hpp"
#include "tedk/mixer.hpp"
#include "tedk/optim.hpp"
#include "tedk/predictor.hpp"

namespace tedk {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 4;
    double base_lr = 1e-4;
    double power = 0.9;
    double weight_decay = 0.01;
    std::uint64_t seed = 0;
    SsiLossConfig loss;
};

struct TrainedPredictor {
    ToyPredictor model;
    double validation_rmse = 0.0;  // on the mixer split, drives rank_predictors
    std::vector<double> epoch_losses;
};

struct TrainedMixer {
    MixerModel model;
    MetricsReport test_metrics;
    std::vector<double> epoch_losses;
};

// Feature maps from every base at the mixer's tap location, in base order.
std::vector<Tensor> base_features(const std::vector<ToyPredictor>& bases, FeatureLocation loc,
                                  const Tensor& rgb);

Tensor ensemble_forward(const std::vector<ToyPredictor>& bases, const MixerModel& mixer,
                        const Tensor& rgb);

// Per-image metrics over `ids` averaged into one dataset-level report.
MetricsReport evaluate_depth_model(const std::function<Tensor(const Tensor&)>& predict,
                                   const std::vector<DepthSample>& dataset,
                                   const std::vector<std::string>& ids, DepthCap cap);

// Pools every pixel across `ids` into one metric computation. Narrow caps can
// leave single images empty, so range curves aggregate at the dataset level;
// a range with no pixel anywhere yields an all-zero report, not an error.
MetricsReport evaluate_depth_range(const std::function<Tensor(const Tensor&)>& predict,
                                   const std::vector<DepthSample>& dataset,
                                   const std::vector<std::string>& ids, DepthCap cap);

// Trains one base predictor on the train_base split with SSI loss, AdamW, and
// the polynomial schedule over epochs * ceil(n / batch) steps. RNG streams
// derive from (cfg.seed, 2 * index) for init and (cfg.seed, 2 * index + 1)
// for shuffling, so predictors train identically in any order. Returns the
// model with its RMSE on the train_mixer split and per-epoch mean losses.
TrainedPredictor train_one_base_predictor(const DatasetSplit& split,
                                          const std::vector<DepthSample>& dataset,
                                          const PredictorArch& arch, int predictor_index,
                                          int feature_channels, double kappa,
                                          const TrainConfig& cfg, DepthCap cap = {});

// Independent training of num_predictors bases, one arch each.
std::vector<TrainedPredictor> train_base_predictors(const DatasetSplit& split,
                                                    const std::vector<DepthSample>& dataset,
                                                    int num_predictors,
                                                    const std::vector<PredictorArch>& arch_list,
                                                    int feature_channels, double kappa,
                                                    const TrainConfig& cfg, DepthCap cap = {});

// Trains a mixer over the train_mixer split against frozen bases. Base
// features are cached up front, so base parameters are read once and never
// written. RBF visit order comes from the bases' validation RMSEs. RNG
// streams are (cfg.seed, 2K) for init and (cfg.seed, 2K + 1) for shuffling.
// Returns the mixer with dataset-level metrics on the test split.
TrainedMixer train_mixer(const std::vector<TrainedPredictor>& predictors,
                         const DatasetSplit& split, const std::vector<DepthSample>& dataset,
                         MixerKind kind, FeatureLocation location, const TrainConfig& cfg,
                         DepthCap cap = {});

void save_predictor_checkpoint(const std::filesystem::path& path, const TrainedPredictor& tp);
TrainedPredictor load_predictor_checkpoint(const std::filesystem::path& path);

void save_mixer_checkpoint(const std::filesystem::path& path, const MixerModel& mixer);
MixerModel load_mixer_checkpoint(const std::filesystem::path& path);

}  // namespace tedk
