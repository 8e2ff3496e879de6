#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tedk/loss.hpp"
#include "tedk/metrics.hpp"
#include "tedk/rng.hpp"

using namespace tedk;

namespace {

Tensor depth_like(Shape shape, Rng& rng, double lo = 0.5, double hi = 9.5) {
    std::vector<double> d(shape_numel(shape));
    for (auto& v : d) v = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(d));
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("zero when prediction equals ground truth, with finite grads") {
    Rng rng(1);
    auto gt = depth_like({1, 1, 6, 6}, rng);
    auto pred = gt.clone();
    pred.set_requires_grad(true);
    auto mask = Tensor::full({1, 1, 6, 6}, 1.0);
    Tape tape;
    auto lb = ssi_loss(pred, gt, mask);
    CHECK(std::abs(lb.loss.item()) < 1e-9);
    CHECK(lb.valid_count == 36);
    tape.backward(lb.loss);
    for (double g : pred.grad()) {
        CHECK(std::isfinite(g));
        CHECK(g == 0.0);  // clamped radicand branch
    }
}

TEST_CASE("uniform log offset hits the closed form") {
    Rng rng(2);
    auto gt = depth_like({1, 1, 5, 5}, rng, 0.5, 3.0);
    auto pred = gt.scale(std::exp(1.0));
    auto mask = Tensor::full({1, 1, 5, 5}, 1.0);
    auto lb = ssi_loss(pred, gt, mask);
    CHECK(lb.loss.item() == doctest::Approx(10.0 * std::sqrt(0.15)).epsilon(1e-6));
    CHECK(lb.g_sq_mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lb.g_mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single pixel with pred = c*gt") {
    for (double c : {0.5, 2.0, 4.7}) {
        auto gt = Tensor::from_data({1}, {3.0});
        auto pred = Tensor::from_data({1}, {3.0 * c});
        auto mask = Tensor::from_data({1}, {1.0});
        auto lb = ssi_loss(pred, gt, mask);
        double expect = 10.0 * std::abs(std::log(c)) * std::sqrt(0.15);
        CHECK(lb.loss.item() == doctest::Approx(expect).epsilon(1e-9));
        // brute-force scalar evaluation of the definition
        double g = std::log(3.0 * c) - std::log(3.0);
        double brute = 10.0 * std::sqrt(std::max(g * g - 0.85 * g * g, 0.0));
        CHECK(lb.loss.item() == doctest::Approx(brute).epsilon(1e-12));
    }
}

TEST_CASE("eta = 1 makes the loss scale invariant") {
    Rng rng(3);
    auto gt = depth_like({1, 1, 8, 8}, rng);
    auto pred = depth_like({1, 1, 8, 8}, rng);
    auto mask = Tensor::full({1, 1, 8, 8}, 1.0);
    SsiLossConfig cfg{.alpha = 10.0, .eta = 1.0};
    auto a = ssi_loss(pred, gt, mask, cfg);
    auto b = ssi_loss(pred.scale(3.7), gt, mask, cfg);
    CHECK(std::abs(a.loss.item() - b.loss.item()) < 1e-7);
    auto c = ssi_loss(gt.scale(2.0), gt, mask, cfg);
    CHECK(std::abs(c.loss.item()) < 1e-7);
}

TEST_CASE("bitwise invariant under joint pixel permutation") {
    Rng rng(4);
    auto gt = depth_like({16}, rng);
    auto pred = depth_like({16}, rng);
    auto mask = Tensor::full({16}, 1.0);
    double base = ssi_loss(pred, gt, mask).loss.item();
    std::vector<int> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    for (int trial = 0; trial < 10; ++trial) {
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
        }
        std::vector<double> p(16), d(16);
        for (int i = 0; i < 16; ++i) {
            p[static_cast<std::size_t>(perm[i])] = pred.data()[i];
            d[static_cast<std::size_t>(perm[i])] = gt.data()[i];
        }
        auto lb = ssi_loss(Tensor::from_data({16}, p), Tensor::from_data({16}, d), mask);
        CHECK(lb.loss.item() == base);  // bitwise
    }
}

TEST_CASE("breakdown fields satisfy the loss identity") {
    Rng rng(5);
    auto gt = depth_like({1, 1, 7, 7}, rng);
    auto pred = depth_like({1, 1, 7, 7}, rng);
    std::vector<double> m(49, 0.0);
    for (int i = 0; i < 49; i += 2) m[static_cast<std::size_t>(i)] = 1.0;
    auto mask = Tensor::from_data({1, 1, 7, 7}, m);
    auto lb = ssi_loss(pred, gt, mask);
    CHECK(lb.valid_count == 25);
    double expect = 10.0 * std::sqrt(std::max(lb.g_sq_mean - 0.85 * lb.g_mean * lb.g_mean, 0.0));
    CHECK(lb.loss.item() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(lb.loss.item() >= 0.0);
}

TEST_CASE("rejects bad inputs") {
    auto ones = Tensor::full({4}, 1.0);
    CHECK_THROWS_AS(ssi_loss(ones, ones, Tensor::zeros({4})), std::invalid_argument);
    auto neg = Tensor::from_data({4}, {1.0, -1.0, 1.0, 1.0});
    CHECK_THROWS_AS(ssi_loss(neg, ones, ones), std::invalid_argument);
    CHECK_THROWS_AS(ssi_loss(ones, neg, ones), std::invalid_argument);
    CHECK_THROWS_AS(ssi_loss(ones, ones, Tensor::full({5}, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(ssi_loss(ones, ones, ones, SsiLossConfig{.alpha = 0.0, .eta = 0.85}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ssi_loss(ones, ones, ones, SsiLossConfig{.alpha = 10.0, .eta = 1.5}),
                    std::invalid_argument);
    // masked-out non-positive pixels are fine
    auto mask = Tensor::from_data({4}, {1.0, 0.0, 1.0, 1.0});
    CHECK_NOTHROW(ssi_loss(neg, ones, mask));
}

TEST_CASE("gradient w.r.t. pred passes grad_check away from the singularity") {
    Rng rng(6);
    auto gt = depth_like({1, 1, 4, 4}, rng);
    auto pred = depth_like({1, 1, 4, 4}, rng);
    auto mask = Tensor::full({1, 1, 4, 4}, 1.0);
    auto rep = grad_check([&](const std::vector<Tensor>& v) {
        return ssi_loss(v[0], gt, mask).loss;
    }, {pred});
    CHECK(rep.passed(1e-4));
    CHECK(rep.linf_analytic > 0.0);
}

}  // TEST_SUITE

TEST_SUITE("metrics") {

TEST_CASE("perfect prediction scores zero errors and unit deltas") {
    Rng rng(7);
    auto gt = depth_like({1, 1, 5, 5}, rng);
    auto mask = Tensor::full({1, 1, 5, 5}, 1.0);
    auto r = compute_metrics(gt, gt, mask, DepthCap{1e-3, 10.0});
    CHECK(r.abs_rel == 0.0);
    CHECK(r.sq_rel == 0.0);
    CHECK(r.rmse == 0.0);
    CHECK(r.rmse_log == 0.0);
    CHECK(r.log10 == 0.0);
    CHECK(r.delta1 == 1.0);
    CHECK(r.delta2 == 1.0);
    CHECK(r.delta3 == 1.0);
    CHECK(r.valid_count == 25);
}

TEST_CASE("two-pixel arithmetic oracle") {
    std::vector<double> gt{2.0, 4.0}, pred{1.0, 5.0};
    std::vector<std::uint8_t> mask{1, 1};
    auto r = compute_metrics(pred, gt, mask, DepthCap{1e-3, 10.0});
    CHECK(r.abs_rel == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(r.rmse == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.sq_rel == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(r.delta1 == 0.0);  // ratios 2.0 and exactly 1.25, strict inequality
    CHECK(r.delta2 == 0.5);
    CHECK(r.delta3 == 0.5);
    double expect_rl = std::sqrt((std::pow(std::log(2.0), 2) + std::pow(std::log(1.25), 2)) / 2.0);
    CHECK(r.rmse_log == doctest::Approx(expect_rl).epsilon(1e-15));
    double expect_l10 = (std::log10(2.0) + std::log10(1.25)) / 2.0;
    CHECK(r.log10 == doctest::Approx(expect_l10).epsilon(1e-15));
}

TEST_CASE("decade offset gives log10 of exactly 1") {
    std::vector<double> gt{0.3, 0.5, 0.9};
    std::vector<double> pred{3.0, 5.0, 9.0};
    std::vector<std::uint8_t> mask{1, 1, 1};
    auto r = compute_metrics(pred, gt, mask, DepthCap{1e-3, 10.0});
    CHECK(r.log10 == 1.0);
}

TEST_CASE("cap filters gt and clamps pred") {
    std::vector<double> gt{0.0005, 2.0, 12.0, 4.0};
    std::vector<double> pred{1.0, 1e-6, 1.0, 15.0};
    std::vector<std::uint8_t> mask{1, 1, 1, 1};
    DepthCap cap{1e-3, 10.0};
    auto r = compute_metrics(pred, gt, mask, cap);
    // gt 0.0005 <= cap.min and gt 12 > cap.max are dropped
    CHECK(r.valid_count == 2);
    // pred 1e-6 clamped to 1e-3, pred 15 clamped to 10
    double e1 = std::abs(1e-3 - 2.0) / 2.0;
    double e2 = std::abs(10.0 - 4.0) / 4.0;
    CHECK(r.abs_rel == doctest::Approx((e1 + e2) / 2.0).epsilon(1e-12));

    std::vector<std::uint8_t> none{0, 0, 0, 0};
    CHECK_THROWS_AS(compute_metrics(pred, gt, none, cap), std::invalid_argument);
    std::vector<double> high{20.0, 20.0, 20.0, 20.0};
    CHECK_THROWS_AS(compute_metrics(pred, high, mask, cap), std::invalid_argument);
}

TEST_CASE("deltas are monotone and rmse_log is symmetric on random inputs") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        int n = rng.uniform_int(1, 40);
        std::vector<double> gt(static_cast<std::size_t>(n)), pred(static_cast<std::size_t>(n));
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            gt[static_cast<std::size_t>(i)] = rng.uniform(0.1, 9.9);
            pred[static_cast<std::size_t>(i)] = rng.uniform(0.1, 9.9);
            mask[static_cast<std::size_t>(i)] = 1;
        }
        auto r = compute_metrics(pred, gt, mask, DepthCap{1e-3, 10.0});
        CHECK(r.delta1 <= r.delta2);
        CHECK(r.delta2 <= r.delta3);
        CHECK(r.delta3 <= 1.0);
        CHECK(r.abs_rel >= 0.0);
        auto flipped = compute_metrics(gt, pred, mask, DepthCap{1e-3, 10.0});
        CHECK(r.rmse_log == flipped.rmse_log);  // exact
    }
}

TEST_CASE("clip_to_cap selects (lo, hi] and clamps pred on the selection") {
    std::vector<double> gt{12.0, 5.0, 10.0, 0.5};
    std::vector<double> pred{3.0, 15.0, 9.0, 2.0};
    auto c = clip_to_cap(pred, gt, 0.0, 10.0);
    CHECK(c.mask == std::vector<std::uint8_t>{0, 1, 1, 1});  // gt 12 excluded, gt 10 included
    CHECK(c.pred[1] == 10.0);  // clamped down
    CHECK(c.pred[2] == 9.0);
    CHECK(c.pred[0] == 3.0);   // untouched outside the selection
    CHECK(c.gt == gt);

    auto ident = clip_to_cap(pred, gt, 0.0, 1000.0);
    CHECK(ident.mask == std::vector<std::uint8_t>{1, 1, 1, 1});
    for (std::size_t i = 0; i < pred.size(); ++i) CHECK(ident.pred[i] == pred[i]);
    CHECK_THROWS_AS(clip_to_cap(pred, gt, 5.0, 5.0), std::invalid_argument);
}

TEST_CASE("aggregate averages reports and sums counts") {
    MetricsReport a, b;
    a.rmse = 1.0; a.delta1 = 0.5; a.valid_count = 10; a.cap = {1e-3, 10.0};
    b.rmse = 3.0; b.delta1 = 1.0; b.valid_count = 30; b.cap = {1e-3, 10.0};
    auto agg = aggregate_metrics({a, b});
    CHECK(agg.rmse == 2.0);
    CHECK(agg.delta1 == 0.75);
    CHECK(agg.valid_count == 40);
    MetricsReport c;
    c.cap = {1e-3, 80.0};
    CHECK_THROWS_AS(aggregate_metrics({a, c}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate_metrics({}), std::invalid_argument);
}

TEST_CASE("csv row matches the column contract") {
    CHECK(MetricsReport::csv_header() ==
          "abs_rel,sq_rel,rmse,rmse_log,log10,d1,d2,d3,cap_min,cap_max,valid_count");
    MetricsReport r;
    r.abs_rel = 0.375;
    r.rmse = 1.0;
    r.cap = {0.001, 10.0};
    r.valid_count = 2;
    auto row = r.csv_row();
    CHECK(row == "0.375,0,1,0,0,0,0,0,0.001,10,2");
}

}  // TEST_SUITE
