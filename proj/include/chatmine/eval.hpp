#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatmine/pairmodel.hpp"

namespace chatmine::eval {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    void add(bool predicted, bool gold);
    ConfusionCounts& operator+=(const ConfusionCounts& o);
};

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// 0/0 is taken as 0 for every ratio.
PRF compute_prf(const ConfusionCounts& c);

/// Indexes of the balanced sample: every original index in order, then
/// minority indexes drawn with replacement until the classes are equal.
std::vector<std::size_t> bootstrap_indices(const std::vector<bool>& positive, std::uint64_t seed);

std::vector<pair::LabeledDialog> bootstrap_balance(const std::vector<pair::LabeledDialog>& dialogs,
                                                   std::uint64_t seed);

struct Fold {
    std::string test_project;
    std::vector<std::string> train_projects;
};

/// One fold per distinct project, in sorted project order.
std::vector<Fold> cross_project_split(std::vector<std::string> projects);

struct ProjectMetrics {
    ConfusionCounts issue;
    ConfusionCounts solution;
};

/// Issue counts over every dialog; solution counts pooled over the body
/// utterances of gold issue dialogs.
ProjectMetrics evaluate_dialogs(const pair::LabeledCorpus& corpus, const std::vector<pair::LabeledDialog>& dialogs,
                                const pair::Pipeline& p);

/// {"per_fold": {project: {"issue": {P,R,F1}, "solution": {...}}},
///  "macro_average": {"issue": {...}, "solution": {...}}}
nlohmann::json metrics_report(const std::map<std::string, ProjectMetrics>& per_project);

/// Scores fixed checkpoints on each community of the corpus.
std::map<std::string, ProjectMetrics> evaluate_per_project(const pair::LabeledCorpus& corpus, const pair::Pipeline& p);

/// Leave-one-project-out: trains both models on the other projects
/// (issue data bootstrap-balanced) and scores the held-out one.
std::map<std::string, ProjectMetrics> cross_project_evaluate(const pair::LabeledCorpus& corpus,
                                                             const pair::ModelConfig& cfg,
                                                             const encoder::Encoder& enc,
                                                             const embed::Lexicons& lex);

}  // namespace chatmine::eval
