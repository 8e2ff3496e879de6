#include "tedk/loss.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace tedk {

LossBreakdown ssi_loss(const Tensor& pred, const Tensor& gt, const Tensor& mask, SsiLossConfig cfg) {
    if (cfg.alpha <= 0.0) throw std::invalid_argument("ssi_loss: alpha must be positive");
    if (cfg.eta < 0.0 || cfg.eta > 1.0) throw std::invalid_argument("ssi_loss: eta must be in [0, 1]");
    if (pred.numel() != gt.numel() || pred.numel() != mask.numel()) {
        throw std::invalid_argument("ssi_loss: pred/gt/mask size mismatch");
    }

    std::vector<std::int64_t> valid;
    const auto& md = mask.data();
    const auto& pd = pred.data();
    const auto& dd = gt.data();
    for (std::size_t i = 0; i < md.size(); ++i) {
        if (md[i] == 0.0) continue;
        if (pd[i] <= 0.0 || dd[i] <= 0.0) {
            throw std::invalid_argument("ssi_loss: non-positive depth at masked pixel " +
                                        std::to_string(i));
        }
        valid.push_back(static_cast<std::int64_t>(i));
    }
    if (valid.empty()) throw std::invalid_argument("ssi_loss: mask has no valid pixels");

    auto g = pred.take(valid).log() - gt.take(valid).log();
    auto g_sq_mean = (g * g).mean_sorted();
    auto g_mean = g.mean_sorted();
    auto radicand = g_sq_mean - (g_mean * g_mean).scale(cfg.eta);

    LossBreakdown out;
    out.loss = radicand.clamped_sqrt().scale(cfg.alpha);
    out.g_sq_mean = g_sq_mean.item();
    out.g_mean = g_mean.item();
    out.valid_count = static_cast<std::int64_t>(valid.size());
    return out;
}

}  // namespace tedk
