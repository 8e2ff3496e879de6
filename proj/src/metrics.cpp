#include "tedk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tedk/util.hpp"

namespace tedk {

std::string MetricsReport::csv_header() {
    return "abs_rel,sq_rel,rmse,rmse_log,log10,d1,d2,d3,cap_min,cap_max,valid_count";
}

std::string MetricsReport::csv_row() const {
    std::string row;
    for (double v : {abs_rel, sq_rel, rmse, rmse_log, log10, delta1, delta2, delta3,
                     cap.min, cap.max}) {
        row += format_float(v);
        row += ',';
    }
    row += std::to_string(valid_count);
    return row;
}

MetricsReport compute_metrics(const std::vector<double>& pred, const std::vector<double>& gt,
                              const std::vector<std::uint8_t>& mask, DepthCap cap) {
    if (pred.size() != gt.size() || pred.size() != mask.size()) {
        throw std::invalid_argument("compute_metrics: pred/gt/mask size mismatch");
    }
    if (!(cap.min < cap.max)) throw std::invalid_argument("compute_metrics: cap.min must be < cap.max");

    const double floor = std::max(cap.min, 1e-3);
    double abs_rel = 0, sq_rel = 0, se = 0, se_log = 0, l10 = 0;
    std::int64_t n = 0, d1 = 0, d2 = 0, d3 = 0;
    constexpr double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        double d = gt[i];
        if (!(d > cap.min && d <= cap.max)) continue;
        double p = std::clamp(pred[i], floor, cap.max);
        double diff = p - d;
        abs_rel += std::abs(diff) / d;
        sq_rel += diff * diff / d;
        se += diff * diff;
        double lg = std::log(p) - std::log(d);
        se_log += lg * lg;
        l10 += std::abs(std::log10(p) - std::log10(d));
        double ratio = std::max(p / d, d / p);
        if (ratio < t1) ++d1;
        if (ratio < t2) ++d2;
        if (ratio < t3) ++d3;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("compute_metrics: no pixel survives the depth cap");

    double inv = 1.0 / static_cast<double>(n);
    MetricsReport r;
    r.abs_rel = abs_rel * inv;
    r.sq_rel = sq_rel * inv;
    r.rmse = std::sqrt(se * inv);
    r.rmse_log = std::sqrt(se_log * inv);
    r.log10 = l10 * inv;
    r.delta1 = static_cast<double>(d1) * inv;
    r.delta2 = static_cast<double>(d2) * inv;
    r.delta3 = static_cast<double>(d3) * inv;
    r.cap = cap;
    r.valid_count = n;
    return r;
}

MetricsReport compute_metrics(const Tensor& pred, const Tensor& gt, const Tensor& mask,
                              DepthCap cap) {
    std::vector<std::uint8_t> m(mask.numel());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = mask.data()[i] != 0.0 ? 1 : 0;
    return compute_metrics(pred.data(), gt.data(), m, cap);
}

MetricsReport aggregate_metrics(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate_metrics: no reports");
    MetricsReport out;
    out.cap = reports[0].cap;
    for (const auto& r : reports) {
        if (r.cap.min != out.cap.min || r.cap.max != out.cap.max) {
            throw std::invalid_argument("aggregate_metrics: mixed depth caps");
        }
        out.abs_rel += r.abs_rel;
        out.sq_rel += r.sq_rel;
        out.rmse += r.rmse;
        out.rmse_log += r.rmse_log;
        out.log10 += r.log10;
        out.delta1 += r.delta1;
        out.delta2 += r.delta2;
        out.delta3 += r.delta3;
        out.valid_count += r.valid_count;
    }
    double inv = 1.0 / static_cast<double>(reports.size());
    out.abs_rel *= inv;
    out.sq_rel *= inv;
    out.rmse *= inv;
    out.rmse_log *= inv;
    out.log10 *= inv;
    out.delta1 *= inv;
    out.delta2 *= inv;
    out.delta3 *= inv;
    return out;
}

ClipResult clip_to_cap(const std::vector<double>& pred, const std::vector<double>& gt,
                       double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("clip_to_cap: lo must be < hi");
    if (pred.size() != gt.size()) throw std::invalid_argument("clip_to_cap: pred/gt size mismatch");
    ClipResult out;
    out.pred = pred;
    out.gt = gt;
    out.mask.assign(pred.size(), 0);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] > lo && gt[i] <= hi) {
            out.mask[i] = 1;
            out.pred[i] = std::clamp(pred[i], lo + 1e-3, hi);
        }
    }
    return out;
}

}  // namespace tedk
