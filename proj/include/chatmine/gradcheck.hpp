#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chatmine/autograd.hpp"

namespace chatmine::nn {

/// Builds a scalar loss on the given tape from the fragment's parameters.
using LossFn = std::function<Var(Tape&)>;

struct GradCheckOptions {
    double step = 1e-5;
    /// 0 checks every entry; otherwise a seeded sample of this many per parameter.
    std::size_t max_entries_per_param = 0;
    std::uint64_t sample_seed = 0;
    /// Relative error is |a - n| / max(|a|, |n|, floor).
    double denominator_floor = 1e-6;
};

struct ParamCheck {
    std::string name;
    std::size_t entries_checked = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::string fragment;
    double tolerance = 0.0;
    double max_rel_error = 0.0;
    std::vector<ParamCheck> params;
    std::vector<std::string> offending;  // parameters above tolerance
    bool passed() const { return offending.empty(); }
};

/// Central-difference check of the tape gradient of `loss` against every
/// parameter in `params`. Parameter values are restored afterwards.
GradCheckReport finite_difference_check(ParameterSet& params, const LossFn& loss, double tolerance,
                                        const GradCheckOptions& opts = {});

}  // namespace chatmine::nn
