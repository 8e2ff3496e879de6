#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tedk {

struct SuiteCase {
    std::string name;
    double max_rel_error = 0.0;  // worst over all seeds
    bool passed = false;
};

// Central-difference checks for every differentiable op: arithmetic,
// activations, reductions, indexing, convolution, the four mixers (params and
// inputs), the depth head, and the training loss. Inputs are drawn per seed
// away from kinks (relu/clamp at 0), where the numeric derivative is
// ill-posed. Runs in f64 with eps 1e-5 against tol.
std::vector<SuiteCase> run_gradient_suite(const std::vector<std::uint64_t>& seeds,
                                          double eps = 1e-5, double tol = 1e-4);

bool suite_passed(const std::vector<SuiteCase>& cases);

// The ten-seed sweep the acceptance gate and the CLI both run.
std::vector<SuiteCase> run_default_gradient_suite();

}  // namespace tedk
