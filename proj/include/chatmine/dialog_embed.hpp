#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "chatmine/autograd.hpp"
#include "chatmine/corpus.hpp"
#include "chatmine/disentangler.hpp"
#include "chatmine/encoder.hpp"

namespace chatmine::embed {

inline constexpr std::size_t kTextualDim = 256;
inline constexpr std::size_t kHeuristicDim = 29;
inline constexpr std::size_t kContextDim = 128;
inline constexpr std::size_t kFusedDim = kTextualDim + kHeuristicDim + kContextDim;

// ---------------------------------------------------------------------------
// Textual extractor: sequential convolution + max-pool stages. Each stage's
// pooled vector is read as the next stage's length-m sequence.

struct ConvStackSpec {
    std::vector<std::size_t> kernels{1024, 512, 256};
    std::size_t kernel_size = 3;

    std::size_t output_dim() const { return kernels.empty() ? 0 : kernels.back(); }
    /// Throws ConfigError when any stage would see fewer than kernel_size values.
    void validate(std::size_t input_len) const;
};

/// Registers conv{1..n}.K [m, h] and conv{1..n}.b [m] in `params`.
void add_conv_parameters(nn::ParameterSet& params, const ConvStackSpec& spec);
void init_conv_parameters(nn::ParameterSet& params, const ConvStackSpec& spec, nn::Rng& rng);

struct LeafSource;

/// Dropout with probability `dropout` follows every stage when training.
nn::Var conv_stack(nn::Tape& t, nn::Var x, const ConvStackSpec& spec, const LeafSource& leaves, double dropout,
                   nn::Rng* rng, bool training);

// ---------------------------------------------------------------------------
// Contextual extractor: local attention with Gaussian distance damping.

struct AttentionTrace {
    std::vector<double> scores;   // per slot, 0 for padding
    std::vector<double> gauss;    // exp(-(s - i)^2 / (2 k^2)), 0 for padding
    std::vector<double> weights;  // normalized, 0 for padding
    bool uniform_fallback = false;
};

/// window [2k+1, d]; W^Q, W^K, W^V [delta, d]. Padded slots take no part in
/// the normalization. Weights are score / sum(score); when the sum is not
/// clearly positive (<= 1e-2 of the summed magnitudes) the weights fall back to
/// uniform over non-pad slots. Output is sum_s a_s W^V u_s / sqrt(d).
nn::Var local_attention(nn::Tape& t, nn::Var window, const std::vector<bool>& pad, nn::Var WQ, nn::Var WK, nn::Var WV,
                        AttentionTrace* trace = nullptr);

double gaussian_factor(std::size_t slot, std::size_t center, std::size_t k);

// ---------------------------------------------------------------------------
// Heuristic attributes.

/// Feature names in vector order.
const std::array<const char*, kHeuristicDim>& heuristic_names();

enum HeuristicIndex : std::size_t {
    kWhat = 0, kWhy, kWhen, kWhere, kWho, kHow,
    kQuestionMark, kExclamationMark,
    kGreeting, kDisapproval,
    kMentionSimi, kMentionSame,
    kNT, kNUT, kNST,
    kAP, kRP,
    kTDH, kTDU,
    kSSPos, kSSNeu, kSSNeg,
    kSWPos, kSWNeu, kSWNeg,
    kSEPos, kSENeu, kSENeg,
    kDI,
};

enum class Polarity { kPositive = 0, kNeutral = 1, kNegative = 2 };

struct Lexicons {
    std::vector<std::vector<std::string>> greetings;    // phrases as token lists
    std::vector<std::vector<std::string>> disapproval;
    std::map<std::string, Polarity, std::less<>> sentiment_words;  // keyed by lemma
    std::map<std::string, Polarity, std::less<>> sentiment_emoji;  // keyed by tag

    static Lexicons from_resources(const std::filesystem::path& dir);
    static Lexicons from_files(const std::filesystem::path& greetings, const std::filesystem::path& disapproval,
                               const std::filesystem::path& sentiment_words,
                               const std::filesystem::path& sentiment_emoji);
};

/// TF-IDF over one chat log: documents are utterances, tf is normalized by
/// scope length and idf = ln((1 + N) / (1 + df)) + 1. Punctuation is not a term.
class TfIdfIndex {
 public:
    explicit TfIdfIndex(const corpus::ChatLog& chat);

    using Weights = std::map<std::string, double>;

    /// Weights of every term in the scope formed by the given token lists.
    Weights scope_weights(const std::vector<const std::vector<std::string>*>& docs) const;
    const Weights& chat_weights() const { return chat_; }

    double idf(const std::string& term) const;

 private:
    std::size_t documents_ = 0;
    std::map<std::string, std::size_t> df_;
    Weights chat_;
};

/// Top-`n` terms by weight, ties broken lexicographically.
std::vector<std::string> top_terms(const TfIdfIndex::Weights& w, std::size_t n = 10);

/// Euclidean distance between two scopes over the union of their top-10 terms,
/// each term weighted as in its own scope (0 when absent).
double topic_distance(const TfIdfIndex::Weights& a, const TfIdfIndex::Weights& b);

struct TopicDeviation {
    double tdh = 0.0;
    double tdu = 0.0;
};

TopicDeviation topic_deviation(const TfIdfIndex& index, const corpus::Utterance& head, const corpus::Utterance& u);

/// Position of the utterance within its dialog: `position` is 1-based over
/// `members` (the head counts as position 1).
struct DialogContext {
    const corpus::ChatLog* chat = nullptr;
    const TfIdfIndex* tfidf = nullptr;
    const disentangle::Dialog* dialog = nullptr;
    std::size_t position = 1;
};

std::array<double, kHeuristicDim> heuristic_attributes(const corpus::Utterance& u, const DialogContext& ctx,
                                                       const Lexicons& lex);

// ---------------------------------------------------------------------------
// Fusion.

struct Standardizer {
    std::array<double, kHeuristicDim> mean{};
    std::array<double, kHeuristicDim> stddev{};

    /// Identity transform (mean 0, std 1).
    static Standardizer identity();
    /// Population statistics; a constant column keeps std 1.
    static Standardizer fit(const std::vector<std::array<double, kHeuristicDim>>& rows);

    std::array<double, kHeuristicDim> apply(const std::array<double, kHeuristicDim>& h) const;

    nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);
};

/// Concatenation textual(256) + heuristic(29) + context(128).
std::vector<double> fuse_features(const std::vector<double>& textual, const std::array<double, kHeuristicDim>& heur,
                                  const std::vector<double>& context);

// ---------------------------------------------------------------------------

/// Where op leaves come from: trainable parameters (gradients recorded) or
/// read-only views of the same tensors for inference.
struct LeafSource {
    nn::ParameterSet* trainable = nullptr;
    const nn::ParameterSet* frozen = nullptr;

    nn::Var operator()(nn::Tape& t, const std::string& name) const;
};

}  // namespace chatmine::embed
