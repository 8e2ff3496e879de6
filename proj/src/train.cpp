#include "tedk/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "tedk/checkpoint.hpp"
#include "tedk/rng.hpp"
#include "tedk/util.hpp"

namespace tedk {

namespace {

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
}

std::int64_t schedule_steps(std::size_t n, const TrainConfig& cfg) {
    const std::int64_t batches =
        static_cast<std::int64_t>((n + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                  static_cast<std::size_t>(cfg.batch_size));
    return static_cast<std::int64_t>(cfg.epochs) * batches;
}

void shuffle_ids(std::vector<std::string>& ids, Rng& rng) {
    for (std::size_t i = ids.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
        std::swap(ids[i - 1], ids[j]);
    }
}

// Epoch-shuffled minibatch SGD driver shared by base and mixer training.
// Returns the per-epoch mean of per-sample losses.
std::vector<double> run_training_loop(ParameterSet& trainable, std::vector<std::string> ids,
                                      const std::function<Tensor(const DepthSample&)>& sample_loss,
                                      const std::vector<DepthSample>& dataset,
                                      const TrainConfig& cfg, Rng& shuffle_rng,
                                      const std::string& task) {
    OptimizerState opt = make_optimizer(trainable, cfg.base_lr, schedule_steps(ids.size(), cfg),
                                        cfg.weight_decay, cfg.power);
    std::vector<double> epoch_losses;
    epoch_losses.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_ids(ids, shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < ids.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(ids.size(), start + static_cast<std::size_t>(cfg.batch_size));
            Tape tape;
            Tensor total;
            for (std::size_t k = start; k < stop; ++k) {
                const Tensor l = sample_loss(sample_by_id(dataset, ids[k]));
                total = total.defined() ? total + l : l;
            }
            const Tensor batch_loss = total.scale(1.0 / static_cast<double>(stop - start));
            if (std::isnan(batch_loss.item())) {
                throw std::runtime_error("training diverged: loss is NaN (" + task + ", epoch " +
                                         std::to_string(epoch) + ")");
            }
            trainable.zero_grads();
            tape.backward(batch_loss);
            adamw_step(trainable, opt);
            loss_sum += batch_loss.item() * static_cast<double>(stop - start);
        }
        epoch_losses.push_back(loss_sum / static_cast<double>(ids.size()));
    }
    return epoch_losses;
}

std::string format_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Predictors run on [N,3,H,W]; dataset images arrive as [3,H,W].
Tensor as_batch(const Tensor& rgb) {
    return rgb.shape().size() == 3 ? rgb.unsqueeze0() : rgb;
}

}  // namespace

std::vector<Tensor> base_features(const std::vector<ToyPredictor>& bases, FeatureLocation loc,
                                  const Tensor& rgb) {
    const Tensor input = as_batch(rgb);
    std::vector<Tensor> feats;
    feats.reserve(bases.size());
    for (const ToyPredictor& base : bases) feats.push_back(base.features_at(loc, input));
    return feats;
}

Tensor ensemble_forward(const std::vector<ToyPredictor>& bases, const MixerModel& mixer,
                        const Tensor& rgb) {
    return mixer.forward(base_features(bases, mixer.location, rgb));
}

MetricsReport evaluate_depth_model(const std::function<Tensor(const Tensor&)>& predict,
                                   const std::vector<DepthSample>& dataset,
                                   const std::vector<std::string>& ids, DepthCap cap) {
    std::vector<MetricsReport> reports;
    reports.reserve(ids.size());
    for (const std::string& id : ids) {
        const DepthSample& s = sample_by_id(dataset, id);
        reports.push_back(compute_metrics(predict(s.rgb), s.depth, s.mask, cap));
    }
    return aggregate_metrics(reports);
}

MetricsReport evaluate_depth_range(const std::function<Tensor(const Tensor&)>& predict,
                                   const std::vector<DepthSample>& dataset,
                                   const std::vector<std::string>& ids, DepthCap cap) {
    std::vector<double> pred, gt;
    std::vector<std::uint8_t> mask;
    bool any = false;
    for (const std::string& id : ids) {
        const DepthSample& s = sample_by_id(dataset, id);
        Tensor p = predict(s.rgb);
        pred.insert(pred.end(), p.data().begin(), p.data().end());
        gt.insert(gt.end(), s.depth.data().begin(), s.depth.data().end());
        for (double m : s.mask.data()) {
            bool on = m != 0.0;
            mask.push_back(on ? 1 : 0);
            std::size_t i = mask.size() - 1;
            if (on && gt[i] > cap.min && gt[i] <= cap.max) any = true;
        }
    }
    if (!any) {
        MetricsReport empty;
        empty.cap = cap;
        return empty;
    }
    return compute_metrics(pred, gt, mask, cap);
}

TrainedPredictor train_one_base_predictor(const DatasetSplit& split,
                                          const std::vector<DepthSample>& dataset,
                                          const PredictorArch& arch, int predictor_index,
                                          int feature_channels, double kappa,
                                          const TrainConfig& cfg, DepthCap cap) {
    validate_train_config(cfg);
    if (split.train_base.empty()) throw std::invalid_argument("train: train_base split is empty");
    if (split.train_mixer.empty()) throw std::invalid_argument("train: train_mixer split is empty");

    TrainedPredictor tp;
    tp.model = build_toy_predictor(
        arch, feature_channels, kappa,
        derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(predictor_index)));
    Rng shuffle_rng(derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(predictor_index) + 1));
    const ToyPredictor& model = tp.model;
    tp.epoch_losses = run_training_loop(
        tp.model.params, split.train_base,
        [&model, &cfg](const DepthSample& s) {
            return ssi_loss(model.forward(as_batch(s.rgb)), s.depth, s.mask, cfg.loss).loss;
        },
        dataset, cfg, shuffle_rng, "predictor " + std::to_string(predictor_index));
    tp.validation_rmse =
        evaluate_depth_model([&model](const Tensor& rgb) { return model.forward(as_batch(rgb)); },
                             dataset, split.train_mixer, cap)
            .rmse;
    return tp;
}

std::vector<TrainedPredictor> train_base_predictors(const DatasetSplit& split,
                                                    const std::vector<DepthSample>& dataset,
                                                    int num_predictors,
                                                    const std::vector<PredictorArch>& arch_list,
                                                    int feature_channels, double kappa,
                                                    const TrainConfig& cfg, DepthCap cap) {
    if (num_predictors < 1) throw std::invalid_argument("train: need at least one predictor");
    if (static_cast<std::size_t>(num_predictors) != arch_list.size()) {
        throw std::invalid_argument("train: predictor count does not match the arch list");
    }
    std::vector<TrainedPredictor> out;
    out.reserve(arch_list.size());
    for (int i = 0; i < num_predictors; ++i) {
        out.push_back(train_one_base_predictor(split, dataset, arch_list[static_cast<std::size_t>(i)],
                                               i, feature_channels, kappa, cfg, cap));
    }
    return out;
}

TrainedMixer train_mixer(const std::vector<TrainedPredictor>& predictors,
                         const DatasetSplit& split, const std::vector<DepthSample>& dataset,
                         MixerKind kind, FeatureLocation location, const TrainConfig& cfg,
                         DepthCap cap) {
    validate_train_config(cfg);
    if (predictors.empty()) throw std::invalid_argument("train: mixer needs base predictors");
    if (split.train_mixer.empty()) throw std::invalid_argument("train: train_mixer split is empty");
    if (split.test.empty()) throw std::invalid_argument("train: test split is empty");

    std::vector<ToyPredictor> bases;
    std::vector<double> val_rmse;
    bases.reserve(predictors.size());
    val_rmse.reserve(predictors.size());
    for (const TrainedPredictor& tp : predictors) {
        if (tp.model.feature_channels != predictors[0].model.feature_channels ||
            tp.model.kappa != predictors[0].model.kappa) {
            throw std::invalid_argument("train: base predictors disagree on channels or kappa");
        }
        bases.push_back(tp.model);
        val_rmse.push_back(tp.validation_rmse);
    }

    const std::uint64_t k2 = 2 * static_cast<std::uint64_t>(predictors.size());
    TrainedMixer tm;
    tm.model = build_mixer(kind, location, static_cast<int>(bases.size()),
                           location_channels(location, bases[0].feature_channels), bases[0].kappa,
                           derive_seed(cfg.seed, k2));
    if (kind == MixerKind::RBF) tm.model.order = rank_predictors(val_rmse);

    // Bases are frozen, so per-sample features are constants; cache them once.
    std::unordered_map<std::string, std::vector<Tensor>> cache;
    cache.reserve(split.train_mixer.size());
    for (const std::string& id : split.train_mixer) {
        cache.emplace(id, base_features(bases, location, sample_by_id(dataset, id).rgb));
    }

    Rng shuffle_rng(derive_seed(cfg.seed, k2 + 1));
    const MixerModel& mixer = tm.model;
    tm.epoch_losses = run_training_loop(
        tm.model.params, split.train_mixer,
        [&mixer, &cache, &cfg](const DepthSample& s) {
            return ssi_loss(mixer.forward(cache.at(s.id)), s.depth, s.mask, cfg.loss).loss;
        },
        dataset, cfg, shuffle_rng, "mixer");
    tm.test_metrics = evaluate_depth_model(
        [&bases, &mixer](const Tensor& rgb) { return ensemble_forward(bases, mixer, rgb); },
        dataset, split.test, cap);
    return tm;
}

void save_predictor_checkpoint(const std::filesystem::path& path, const TrainedPredictor& tp) {
    std::map<std::string, std::string> meta;
    meta["model"] = "predictor";
    meta["arch.depth"] = std::to_string(tp.model.arch.depth);
    meta["arch.width"] = std::to_string(tp.model.arch.width);
    meta["arch.dilation"] = std::to_string(tp.model.arch.dilation);
    meta["arch.activation"] = activation_to_string(tp.model.arch.activation);
    meta["feature_channels"] = std::to_string(tp.model.feature_channels);
    meta["kappa"] = format_exact(tp.model.kappa);
    meta["validation_rmse"] = format_exact(tp.validation_rmse);
    save_checkpoint(path, tp.model.params, meta);
}

TrainedPredictor load_predictor_checkpoint(const std::filesystem::path& path) {
    LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.metadata.at("model") != "predictor") {
        throw std::runtime_error("checkpoint: not a predictor checkpoint");
    }
    TrainedPredictor tp;
    tp.model.arch.depth = std::stoi(ck.metadata.at("arch.depth"));
    tp.model.arch.width = std::stoi(ck.metadata.at("arch.width"));
    tp.model.arch.dilation = std::stoi(ck.metadata.at("arch.dilation"));
    tp.model.arch.activation = activation_from_string(ck.metadata.at("arch.activation"));
    tp.model.feature_channels = std::stoi(ck.metadata.at("feature_channels"));
    tp.model.kappa = std::stod(ck.metadata.at("kappa"));
    tp.validation_rmse = std::stod(ck.metadata.at("validation_rmse"));
    tp.model.params = std::move(ck.params);
    return tp;
}

void save_mixer_checkpoint(const std::filesystem::path& path, const MixerModel& mixer) {
    std::map<std::string, std::string> meta;
    meta["model"] = "mixer";
    meta["mixer_kind"] = mixer_to_string(mixer.kind);
    meta["location"] = location_to_string(mixer.location);
    meta["num_predictors"] = std::to_string(mixer.num_predictors);
    meta["feature_channels"] = std::to_string(mixer.feature_channels);
    meta["kappa"] = format_exact(mixer.kappa);
    std::string order;
    for (int idx : mixer.order) {
        if (!order.empty()) order += ",";
        order += std::to_string(idx);
    }
    meta["order"] = order;
    save_checkpoint(path, mixer.params, meta);
}

MixerModel load_mixer_checkpoint(const std::filesystem::path& path) {
    LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.metadata.at("model") != "mixer") {
        throw std::runtime_error("checkpoint: not a mixer checkpoint");
    }
    MixerModel mixer;
    mixer.kind = mixer_from_string(ck.metadata.at("mixer_kind"));
    mixer.location = location_from_string(ck.metadata.at("location"));
    mixer.num_predictors = std::stoi(ck.metadata.at("num_predictors"));
    mixer.feature_channels = std::stoi(ck.metadata.at("feature_channels"));
    mixer.kappa = std::stod(ck.metadata.at("kappa"));
    mixer.order.clear();
    const std::string& order = ck.metadata.at("order");
    for (std::size_t pos = 0; pos < order.size();) {
        std::size_t next = order.find(',', pos);
        if (next == std::string::npos) next = order.size();
        mixer.order.push_back(std::stoi(order.substr(pos, next - pos)));
        pos = next + 1;
    }
    mixer.params = std::move(ck.params);
    return mixer;
}

}  // namespace tedk
