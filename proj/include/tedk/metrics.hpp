#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tedk/tensor.hpp"

namespace tedk {

struct DepthCap {
    double min = 1e-3;
    double max = 10.0;
};

struct MetricsReport {
    double abs_rel = 0.0;
    double sq_rel = 0.0;
    double rmse = 0.0;
    double rmse_log = 0.0;
    double log10 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    DepthCap cap;
    std::int64_t valid_count = 0;

    static std::string csv_header();
    std::string csv_row() const;
};

// Standard depth metrics over mask ∧ (cap.min < gt <= cap.max), with pred
// clamped into [max(cap.min, 1e-3), cap.max] first. Deltas use a strict <.
MetricsReport compute_metrics(const std::vector<double>& pred, const std::vector<double>& gt,
                              const std::vector<std::uint8_t>& mask, DepthCap cap);
MetricsReport compute_metrics(const Tensor& pred, const Tensor& gt, const Tensor& mask,
                              DepthCap cap);

// Per-image reports averaged into one dataset-level report; valid counts sum.
MetricsReport aggregate_metrics(const std::vector<MetricsReport>& reports);

struct ClipResult {
    std::vector<double> pred;
    std::vector<double> gt;
    std::vector<std::uint8_t> mask;
};

// Range analysis helper: mask' selects gt in (lo, hi], pred is clamped into
// [lo + 1e-3, hi] on selected pixels, gt passes through.
ClipResult clip_to_cap(const std::vector<double>& pred, const std::vector<double>& gt,
                       double lo, double hi);

}  // namespace tedk
