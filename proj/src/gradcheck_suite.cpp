#include "tedk/gradcheck_suite.hpp"

#include <functional>
#include <numeric>

#include "tedk/loss.hpp"
#include "tedk/mixer.hpp"
#include "tedk/rng.hpp"
#include "tedk/tensor.hpp"

namespace tedk {

namespace {

// Uniform in +-[0.1, 1.1): bounded away from zero so kinked ops (relu, elu,
// clamped_sqrt) are checked on smooth ground.
Tensor random_signed(const Shape& shape, Rng& rng) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) {
        double m = rng.uniform(0.1, 1.1);
        x = rng.bernoulli(0.5) ? m : -m;
    }
    return Tensor::from_data(shape, std::move(v));
}

Tensor random_positive(const Shape& shape, Rng& rng) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.uniform(0.2, 1.2);
    return Tensor::from_data(shape, std::move(v));
}

MixerModel with_params(const MixerModel& proto, const std::vector<Tensor>& v) {
    MixerModel m;
    m.kind = proto.kind;
    m.location = proto.location;
    m.num_predictors = proto.num_predictors;
    m.feature_channels = proto.feature_channels;
    m.kappa = proto.kappa;
    m.order = proto.order;
    for (std::size_t i = 0; i < proto.params.size(); ++i) {
        m.params.add(proto.params.name_at(i), v.at(i));
    }
    return m;
}

struct CaseRunner {
    std::vector<SuiteCase>& out;
    double eps;
    double tol;

    void run(const std::string& name, std::uint64_t seed,
             const std::function<Tensor(const std::vector<Tensor>&)>& f,
             const std::vector<Tensor>& points) {
        GradCheckReport rep = grad_check(f, points, eps);
        for (SuiteCase& c : out) {
            if (c.name != name) continue;
            c.max_rel_error = std::max(c.max_rel_error, rep.rel_error);
            c.passed = c.passed && c.max_rel_error < tol;
            return;
        }
        out.push_back({name, rep.rel_error, rep.rel_error < tol});
        (void)seed;
    }
};

}  // namespace

std::vector<SuiteCase> run_gradient_suite(const std::vector<std::uint64_t>& seeds, double eps,
                                          double tol) {
    PrecisionGuard guard(Precision::f64);
    std::vector<SuiteCase> cases;
    CaseRunner runner{cases, eps, tol};

    for (std::uint64_t seed : seeds) {
        Rng rng(derive_seed(seed, 0xC0FFEE));
        const Shape sh{2, 3, 4};

        auto unary = [&](const std::string& name, const Tensor& x,
                         const std::function<Tensor(const Tensor&)>& op) {
            runner.run(name, seed, [&](const std::vector<Tensor>& v) { return op(v[0]).mean(); },
                       {x});
        };

        runner.run("add", seed,
                   [](const std::vector<Tensor>& v) { return (v[0] + v[1]).mean(); },
                   {random_signed(sh, rng), random_signed(sh, rng)});
        runner.run("sub", seed,
                   [](const std::vector<Tensor>& v) { return (v[0] - v[1]).mean(); },
                   {random_signed(sh, rng), random_signed(sh, rng)});
        runner.run("mul", seed,
                   [](const std::vector<Tensor>& v) { return (v[0] * v[1]).mean(); },
                   {random_signed(sh, rng), random_signed(sh, rng)});
        unary("affine", random_signed(sh, rng),
              [](const Tensor& x) { return x.affine(1.7, -0.3); });
        unary("log", random_positive(sh, rng), [](const Tensor& x) { return x.log(); });
        unary("clamped_sqrt", random_positive(sh, rng),
              [](const Tensor& x) { return x.clamped_sqrt(); });
        unary("sigmoid", random_signed(sh, rng), [](const Tensor& x) { return x.sigmoid(); });
        unary("tanh", random_signed(sh, rng), [](const Tensor& x) { return x.tanh(); });
        unary("elu", random_signed(sh, rng), [](const Tensor& x) { return x.elu(); });
        unary("relu", random_signed(sh, rng), [](const Tensor& x) { return x.relu(); });
        unary("unsqueeze0", random_signed(sh, rng),
              [](const Tensor& x) { return x.unsqueeze0(); });

        runner.run("sum", seed, [](const std::vector<Tensor>& v) { return v[0].sum(); },
                   {random_signed(sh, rng)});
        runner.run("mean", seed, [](const std::vector<Tensor>& v) { return v[0].mean(); },
                   {random_signed(sh, rng)});
        runner.run("mean_sorted", seed,
                   [](const std::vector<Tensor>& v) { return v[0].mean_sorted(); },
                   {random_signed(sh, rng)});

        std::vector<std::int64_t> idx{0, 5, 7, 11, 23};
        runner.run("take", seed,
                   [&idx](const std::vector<Tensor>& v) { return v[0].take(idx).mean(); },
                   {random_signed(sh, rng)});

        for (int dilation : {1, 2}) {
            runner.run("conv2d_3x3_d" + std::to_string(dilation), seed,
                       [dilation](const std::vector<Tensor>& v) {
                           auto y = conv2d_3x3(v[0], v[1], v[2], dilation);
                           return (y * y).mean();
                       },
                       {random_signed({1, 2, 5, 5}, rng), random_signed({3, 2, 3, 3}, rng),
                        random_signed({3}, rng)});
        }

        runner.run("concat_channels", seed,
                   [](const std::vector<Tensor>& v) {
                       return concat_channels({v[0], v[1]}).mean();
                   },
                   {random_signed({1, 2, 4, 4}, rng), random_signed({1, 3, 4, 4}, rng)});
        runner.run("sum_sorted", seed,
                   [](const std::vector<Tensor>& v) {
                       return sum_sorted({v[0], v[1], v[2]}).mean();
                   },
                   {random_signed(sh, rng), random_signed(sh, rng), random_signed(sh, rng)});

        for (MixerKind kind : all_mixer_kinds()) {
            MixerModel proto =
                build_mixer(kind, FeatureLocation::Penultimate, 2, 2, 10.0, derive_seed(seed, 7));
            if (kind == MixerKind::RBF) proto.order = {1, 0};
            std::vector<Tensor> feats{random_signed({1, 2, 4, 4}, rng),
                                      random_signed({1, 2, 4, 4}, rng)};
            const std::string base = "mixer_" + mixer_to_string(kind);
            if (proto.params.size() > 0) {
                std::vector<Tensor> pts;
                for (std::size_t i = 0; i < proto.params.size(); ++i) {
                    pts.push_back(proto.params.tensor_at(i));
                }
                runner.run(base + "_params", seed,
                           [&](const std::vector<Tensor>& v) {
                               auto d = with_params(proto, v).forward(feats);
                               return (d * d).mean();
                           },
                           pts);
            }
            runner.run(base + "_inputs", seed,
                       [&](const std::vector<Tensor>& v) {
                           auto d = proto.forward(v);
                           return (d * d).mean();
                       },
                       feats);
        }

        // Depth head alone: kappa * sigmoid(conv(F)).
        runner.run("depth_head", seed,
                   [](const std::vector<Tensor>& v) {
                       auto y = conv2d_3x3(v[0], v[1], v[2]).sigmoid().scale(10.0);
                       return (y * y).mean();
                   },
                   {random_signed({1, 3, 4, 4}, rng), random_signed({1, 3, 3, 3}, rng),
                    random_signed({1}, rng)});

        // Loss gradient w.r.t. predictions, off the radicand-zero singularity.
        {
            Shape dsh{1, 1, 4, 4};
            Tensor gt = random_positive(dsh, rng);
            Tensor pred = random_positive(dsh, rng);
            Tensor mask = Tensor::full(dsh, 1.0);
            SsiLossConfig lcfg;
            runner.run("ssi_loss", seed,
                       [&](const std::vector<Tensor>& v) {
                           return ssi_loss(v[0], gt, mask, lcfg).loss;
                       },
                       {pred});
        }
    }
    return cases;
}

bool suite_passed(const std::vector<SuiteCase>& cases) {
    for (const SuiteCase& c : cases) {
        if (!c.passed) return false;
    }
    return !cases.empty();
}

std::vector<SuiteCase> run_default_gradient_suite() {
    std::vector<std::uint64_t> seeds(10);
    std::iota(seeds.begin(), seeds.end(), 0);
    return run_gradient_suite(seeds);
}

}  // namespace tedk
