#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "chatmine/autograd.hpp"
#include "chatmine/corpus.hpp"
#include "chatmine/optim.hpp"

namespace chatmine::disentangle {

/// Parent value meaning "starts a new dialog".
inline constexpr std::size_t kSelf = std::numeric_limits<std::size_t>::max();

inline constexpr std::size_t kBaseFeatureCount = 77;

struct LinkConfig {
    std::size_t feature_dim = kBaseFeatureCount;  // truncates or zero-pads the base set
    std::size_t lookback = 50;
    std::size_t hidden = 512;
    double threshold = 0.5;

    void validate() const;
};

/// Names of the base feature set, index-aligned with the vector.
const std::vector<std::string>& feature_names();

struct LinkFeatureVector {
    std::vector<double> values;
};

/// Per-log caches (token sets, mentions, author history) for feature extraction.
class LinkFeatureExtractor {
 public:
    LinkFeatureExtractor(const corpus::ChatLog& log, LinkConfig cfg);

    /// parent < child, or kSelf. child - parent must be within the lookback window.
    LinkFeatureVector extract(std::size_t child, std::size_t parent) const;

 private:
    struct Info {
        std::vector<std::string> token_set;  // sorted, punctuation removed
        std::vector<std::string> mentions;   // lowercase @names
        bool question = false;
        bool starts_wh = false;
        bool greeting = false;
        bool thanks = false;
        bool code = false;
        bool url = false;
        bool starts_mention = false;
        std::size_t token_count = 0;
    };

    bool mentions(std::size_t who, const std::string& author) const;

    const corpus::ChatLog& log_;
    LinkConfig cfg_;
    std::vector<Info> info_;
};

LinkFeatureVector extract_link_features(const corpus::ChatLog& log, std::size_t child, std::size_t parent,
                                        const LinkConfig& cfg = {});

/// Two dense layers: softsign(W1 f + b1) -> w2 . h + b2, squashed by a sigmoid.
class LinkScorer {
 public:
    explicit LinkScorer(LinkConfig cfg = {});

    const LinkConfig& config() const { return cfg_; }
    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }

    void initialize(nn::Rng& rng);

    /// Logit on a tape (for training and gradient checks).
    nn::Var logit(nn::Tape& tape, const LinkFeatureVector& f);
    double score(const LinkFeatureVector& f) const;

    void save(const std::filesystem::path& path) const;
    static LinkScorer load(const std::filesystem::path& path);

 private:
    LinkConfig cfg_;
    nn::ParameterSet params_;
};

/// Score of linking child to parent (parent may be kSelf).
using ScoreFn = std::function<double(std::size_t child, std::size_t parent)>;

/// For each utterance pick the best-scoring candidate among the lookback
/// window and SELF; ties go to the most recent candidate (SELF counts as the
/// most recent). A best score below `threshold` forces SELF.
std::vector<std::size_t> choose_parents(std::size_t n, const ScoreFn& score, std::size_t lookback, double threshold);

struct Dialog {
    std::size_t subject_id = 0;             // index of the earliest member
    std::vector<std::size_t> members;       // chronological log indexes
    std::string initiator_id;
    corpus::Utterance head;                 // concatenated leading run of the initiator
    std::vector<std::size_t> head_sources;  // members merged into the head
    std::vector<std::size_t> body;          // remaining members

    bool has_body() const { return !body.empty(); }
};

/// Connected components of the chosen links, ordered by subject_id, with head/body split.
std::vector<Dialog> dialogs_from_parents(const corpus::ChatLog& log, const std::vector<std::size_t>& parents);

std::vector<Dialog> assemble_dialogs(const corpus::ChatLog& log, const ScoreFn& score, std::size_t lookback,
                                     double threshold);
std::vector<Dialog> assemble_dialogs(const corpus::ChatLog& log, const LinkScorer& scorer, double threshold);
std::vector<Dialog> assemble_dialogs(const corpus::ChatLog& log, const LinkScorer& scorer);

/// Builds a dialog from chronological members and fills head/body.
Dialog make_dialog(const corpus::ChatLog& log, std::vector<std::size_t> members);

/// Head = initiator's leading run up to the first utterance by anyone else;
/// body = every remaining member.
Dialog split_head_body(const corpus::ChatLog& log, Dialog d);

void write_dialogs(std::ostream& out, const std::vector<Dialog>& dialogs);

// ---------------------------------------------------------------------------
// Training on synthetic interleavings of single-thread dialogs.

struct ThreadedLog {
    corpus::ChatLog log;
    std::vector<std::size_t> gold_parent;  // previous member of the same thread, or kSelf
    std::vector<std::size_t> thread_of;
};

/// Interleaves whole threads preserving their internal order; times are
/// reassigned with seeded gaps starting at `start_time_ms`.
ThreadedLog interleave_threads(const std::vector<std::vector<corpus::Utterance>>& threads, nn::Rng& rng,
                               std::int64_t start_time_ms = 0);

struct LinkTrainConfig {
    std::size_t epochs = 8;
    std::size_t negatives_per_child = 8;
    std::size_t batch_size = 32;
    nn::AdamConfig adam{};
    std::uint64_t seed = 7;
};

struct LinkTrainReport {
    std::size_t examples = 0;
    std::vector<double> epoch_loss;
};

LinkTrainReport train_link_scorer(LinkScorer& scorer, const std::vector<ThreadedLog>& data,
                                  const LinkTrainConfig& cfg);

}  // namespace chatmine::disentangle
