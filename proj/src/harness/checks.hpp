#pragma once

#include "core/tensor.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace dvface {

struct CheckResult {
    std::string suite, name;
    bool pass = false;
    double ms = 0.0;
    std::string detail;
};

// Central-difference gradient probe: compares the analytic gradient of
// loss_fn() w.r.t. `param` against finite differences at up to n_probe
// entries; returns the worst relative error.
double fd_relative_error(const std::function<Tensor()>& loss_fn, Tensor param, int n_probe = 8,
                         double eps = 1e-5);

// Suites: algebra, gradients, oracles, freeze, or all. Returns the number of
// failed checks; results stream to `os` one line per check with timing.
int run_checks(const std::string& suite, std::ostream& os);

}  // namespace dvface
