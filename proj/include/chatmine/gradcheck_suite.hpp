#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatmine/gradcheck.hpp"

namespace chatmine::nn {

/// Names of the shipped gradient-check fragments, in run order:
/// linear, conv1d_maxpool, softsign, softmax_ce, local_attention,
/// local_attention_padded, fc_head, pair_model_small.
const std::vector<std::string>& gradcheck_fragments();

/// One finite-difference check of a fragment built from `seed`.
GradCheckReport run_fragment(const std::string& name, std::uint64_t seed, double tolerance);

struct SuiteResult {
    std::vector<std::pair<std::uint64_t, GradCheckReport>> runs;
    double seconds = 0.0;

    bool passed() const;
    nlohmann::json to_json() const;
};

SuiteResult run_gradcheck_suite(double tolerance, const std::vector<std::uint64_t>& seeds);

}  // namespace chatmine::nn
