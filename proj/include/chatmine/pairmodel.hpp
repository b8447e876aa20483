#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatmine/dialog_embed.hpp"
#include "chatmine/disentangler.hpp"
#include "chatmine/encoder.hpp"
#include "chatmine/optim.hpp"

namespace chatmine::pair {

enum class Target { kIssue, kSolution };

std::string target_name(Target t);
Target target_from_name(const std::string& name);

struct ModelConfig {
    std::size_t batch_size = 8;
    double dropout = 0.6;
    nn::AdamConfig adam{};
    std::size_t max_epochs = 100;
    std::size_t patience = 5;
    double issue_threshold = 0.5;
    double solution_threshold = 0.4;
    double validation_fraction = 0.1;
    bool balance = false;  // bootstrap-balance issue training data
    std::uint64_t seed = 1;

    embed::ConvStackSpec conv{};
    std::size_t attention_dim = embed::kContextDim;
    std::size_t hidden = 64;

    std::size_t fused_dim() const { return conv.output_dim() + embed::kHeuristicDim + attention_dim; }

    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Labeled data.

struct LabeledDialog {
    std::string dialog_id;
    std::size_t log_index = 0;  // into LabeledCorpus::logs
    disentangle::Dialog dialog;
    bool issue = false;
    std::vector<bool> solution;  // one per body utterance
};

struct LabeledCorpus {
    std::vector<corpus::ChatLog> logs;  // one per community, sorted by community id
    std::vector<LabeledDialog> dialogs;

    const corpus::ChatLog& log_of(const LabeledDialog& d) const { return logs.at(d.log_index); }
    std::vector<std::string> communities() const;
    /// Dialogs of the given communities, in corpus order.
    std::vector<LabeledDialog> select(const std::vector<std::string>& communities) const;
};

/// JSONL, one dialog per line:
///   {"community_id", "dialog_id", "issue": bool,
///    "utterances": [{"time", "id", "text", "solution": bool}, ...]}
/// Each community's chat log is the time-ordered union of its dialogs.
LabeledCorpus load_labeled_dialogs(std::istream& in, const corpus::Preprocessor& pre);
LabeledCorpus load_labeled_dialogs_file(const std::filesystem::path& path, const corpus::Preprocessor& pre);

/// Reply-link supervision from labeled dialogs: each community log with gold
/// parents (previous member of the same dialog), plus `rounds` seeded
/// re-interleavings of random groups of 2-5 dialogs per community.
std::vector<disentangle::ThreadedLog> link_training_logs(const LabeledCorpus& corpus, std::size_t rounds,
                                                         std::uint64_t seed);

// ---------------------------------------------------------------------------
// Model inputs.

struct Example {
    std::vector<double> center;           // encoder vector of the classified utterance
    nn::Tensor window;                    // [2k+1, d]
    std::vector<bool> pad;
    std::array<double, embed::kHeuristicDim> heuristics{};  // raw, standardized inside the model
    std::size_t label = 0;
};

/// Read-only resources shared by feature extraction.
struct FeatureResources {
    const encoder::Encoder* encoder = nullptr;
    const embed::Lexicons* lexicons = nullptr;
};

/// Encodings of the sequence [head, b1 .. bn].
std::vector<encoder::UtteranceEncoding> dialog_encodings(const corpus::ChatLog& log, const disentangle::Dialog& d,
                                                         const encoder::Encoder& enc);

Example issue_example(const corpus::ChatLog& log, const embed::TfIdfIndex& tfidf, const disentangle::Dialog& d,
                      const FeatureResources& res, bool label = false);

/// One example per body utterance; labels may be empty (all 0).
std::vector<Example> solution_examples(const corpus::ChatLog& log, const embed::TfIdfIndex& tfidf,
                                       const disentangle::Dialog& d, const FeatureResources& res,
                                       const std::vector<bool>& labels = {});

/// Issue examples for every dialog, or solution examples for every body
/// utterance of issue dialogs.
std::vector<Example> build_examples(const LabeledCorpus& corpus, const std::vector<LabeledDialog>& dialogs,
                                    Target target, const FeatureResources& res);

// ---------------------------------------------------------------------------

/// Dialog-embedding extractor plus a two-layer classification head.
///
/// fused = conv stack(u_i) ++ standardized heuristics ++ local attention
/// logits = fc2 . dropout(ReLU(fc1 . fused))
class PairModel {
 public:
    PairModel(Target target, ModelConfig cfg, std::size_t input_dim);

    Target target() const { return target_; }
    const ModelConfig& config() const { return cfg_; }
    ModelConfig& config() { return cfg_; }
    std::size_t input_dim() const { return input_dim_; }

    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }

    const embed::Standardizer& standardizer() const { return stats_; }
    void set_standardizer(embed::Standardizer s) { stats_ = s; }

    /// Encoder settings the model was trained with; checked against the runtime encoder.
    const nlohmann::json& encoder_stamp() const { return encoder_stamp_; }
    void stamp_encoder(const encoder::Encoder& enc);

    /// Free-form training summary carried through save/load unchanged.
    const nlohmann::json& training_info() const { return info_; }
    void set_training_info(nlohmann::json info) { info_ = std::move(info); }

    void initialize(nn::Rng& rng);

    /// Logits [2] with gradients into the parameters.
    nn::Var logits(nn::Tape& t, const Example& ex, bool training, nn::Rng* rng);
    /// Fused feature vector on a tape (gradients flow when `trainable`).
    nn::Var fused(nn::Tape& t, const Example& ex, const embed::LeafSource& leaves, bool training, nn::Rng* rng) const;
    nn::Var head(nn::Tape& t, nn::Var fused, const embed::LeafSource& leaves, bool training, nn::Rng* rng) const;

    /// P(positive | example); thread-safe.
    double probability(const Example& ex) const;
    std::vector<double> fused_values(const Example& ex) const;

    void save(const std::filesystem::path& path) const;
    static PairModel load(const std::filesystem::path& path);

 private:
    Target target_;
    ModelConfig cfg_;
    std::size_t input_dim_;
    nn::ParameterSet params_;
    embed::Standardizer stats_ = embed::Standardizer::identity();
    nlohmann::json encoder_stamp_ = nlohmann::json::object();
    nlohmann::json info_ = nlohmann::json::object();
};

/// Fails with ConfigError naming the differing settings.
void check_encoder(const PairModel& model, const encoder::Encoder& enc);

struct TrainReport {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_validation_loss = 0.0;
    std::size_t train_examples = 0;
    std::size_t validation_examples = 0;
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    bool stopped_early = false;
};

/// Mini-batch Adam with a seeded validation split and early stopping; the
/// model ends with its best-validation parameters. Single-class data throws
/// DataError.
TrainReport train_model(PairModel& model, const std::vector<Example>& examples);

/// Builds the examples (bootstrap-balancing issue data when configured) and trains.
PairModel train_from_corpus(const LabeledCorpus& corpus, const std::vector<LabeledDialog>& dialogs, Target target,
                            const ModelConfig& cfg, const encoder::Encoder& enc, const embed::Lexicons& lex,
                            TrainReport* report = nullptr);

// ---------------------------------------------------------------------------
// Inference.

struct Prediction {
    double p_issue = 0.0;
    std::vector<double> p_solution;
    double issue_threshold = 0.5;
    double solution_threshold = 0.4;
};

struct Pipeline {
    const PairModel* issue = nullptr;
    const PairModel* solution = nullptr;
    FeatureResources resources;
    double issue_threshold = 0.5;
    double solution_threshold = 0.4;
};

/// Positive iff P(I | head) >= issue_threshold.
bool predict_issue(const corpus::ChatLog& log, const embed::TfIdfIndex& tfidf, const disentangle::Dialog& d,
                   const Pipeline& p, Prediction* out = nullptr);

struct SelectedSolution {
    std::size_t index = 0;  // log index
    double probability = 0.0;
};

/// Body utterances with P(S | u) >= solution_threshold, chronological.
std::vector<SelectedSolution> predict_solutions(const corpus::ChatLog& log, const embed::TfIdfIndex& tfidf,
                                                const disentangle::Dialog& d, const Pipeline& p,
                                                Prediction* out = nullptr);

struct SolutionUtterance {
    std::string text;
    std::string author;
    std::int64_t time = 0;
    double p = 0.0;
};

struct IssueSolutionPair {
    std::string community_id;
    std::size_t subject_id = 0;
    std::string issue_text;
    std::vector<SolutionUtterance> solutions;
    double p_issue = 0.0;

    std::string status() const { return solutions.empty() ? "unresolved" : "answered"; }
};

/// Issue gate then solution extraction for every dialog, in dialog order.
/// `jobs` > 1 spreads dialogs over worker threads without changing the output.
std::vector<IssueSolutionPair> pairs_from_dialogs(const corpus::ChatLog& log,
                                                  const std::vector<disentangle::Dialog>& dialogs, const Pipeline& p,
                                                  std::size_t jobs = 1);

/// Disentangle, split, gate and extract.
std::vector<IssueSolutionPair> assemble_pairs(const corpus::ChatLog& log, const disentangle::LinkScorer& scorer,
                                              const Pipeline& p, std::size_t jobs = 1);

void write_pairs(std::ostream& out, const std::vector<IssueSolutionPair>& pairs);

}  // namespace chatmine::pair
