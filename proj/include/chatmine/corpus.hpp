#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <unordered_map>
#include <vector>

#include "chatmine/text.hpp"

namespace chatmine::corpus {

/// One exported chat message: {"time": epoch-ms, "id": author, "text": ...}.
struct RawMessage {
    std::int64_t time = 0;
    std::string author_id;
    std::string text;
};

enum class Placeholder : std::size_t { kUrl = 0, kEmail, kHtml, kCode, kId, kCount };

inline constexpr std::size_t kPlaceholderCount = static_cast<std::size_t>(Placeholder::kCount);

std::string_view placeholder_name(Placeholder p);
std::string_view placeholder_tag(Placeholder p);

using PlaceholderCounts = std::array<std::uint32_t, kPlaceholderCount>;

struct Utterance {
    std::size_t index = 0;
    std::int64_t time = 0;
    std::string author_id;
    std::string raw_text;
    std::string clean_text;           // after substitution, expansion, emoji tags, lowercasing
    std::vector<std::string> tokens;  // lemmatized, stopwords removed
    PlaceholderCounts placeholders_hit{};
};

struct ChatLog {
    std::string community_id;
    std::vector<Utterance> utterances;

    std::size_t size() const { return utterances.size(); }
    const Utterance& operator[](std::size_t i) const { return utterances[i]; }
};

struct PreprocessConfig {
    std::filesystem::path stopwords;
    std::filesystem::path acronyms;
    std::filesystem::path emoji;
    std::filesystem::path placeholder_rules;
    std::filesystem::path lemma_rules;
    double perplexity_threshold = 40.0;
    double merge_time_gap_max = 60.0;  // seconds
    bool typo_correction = true;

    /// Paths resolved against a resource directory with the bundled file names.
    static PreprocessConfig with_resources(const std::filesystem::path& dir);
    void validate() const;
};

/// Loaded lexicons and compiled rules; immutable after construction.
class Preprocessor {
 public:
    explicit Preprocessor(const PreprocessConfig& cfg);

    const PreprocessConfig& config() const { return cfg_; }

    Utterance preprocess(const RawMessage& raw) const;

    /// Text after placeholder substitution, acronym expansion, emoji
    /// normalization and lowercasing.
    std::string clean(std::string_view raw, PlaceholderCounts* hits = nullptr) const;

    /// Lemmatize and drop stopwords from an already-cleaned text.
    std::vector<std::string> normalize_tokens(std::string_view clean_text) const;

    bool is_stopword(std::string_view token) const;

 private:
    struct Rule {
        Placeholder kind;
        std::regex pattern;
    };
    struct Acronym {
        std::string key;  // lowercase
        std::string expansion;
    };

    std::string substitute_placeholders(std::string_view s, PlaceholderCounts& hits) const;
    std::string expand_acronyms(std::string_view s) const;
    std::string normalize_emoji(std::string_view s) const;

    PreprocessConfig cfg_;
    std::vector<Rule> rules_;
    std::vector<Acronym> acronyms_;
    std::vector<std::pair<std::string, std::string>> emoji_;  // longest key first
    std::vector<std::string> stopwords_;                       // sorted
    text::Lemmatizer lemmatizer_;
};

// ---------------------------------------------------------------------------

struct SkipRecord {
    std::size_t line_no = 0;  // 1-based
    std::string reason;
};

struct ParseResult {
    std::vector<RawMessage> messages;  // stable-sorted by time
    std::vector<SkipRecord> skipped;
};

/// Parses JSONL chat exports; malformed lines are recorded, not fatal.
ParseResult parse_messages(std::istream& in);
ParseResult parse_messages_file(const std::filesystem::path& path);

struct ParsedLog {
    ChatLog log;
    std::vector<SkipRecord> skipped;
};

/// Parse then preprocess every message; indexes are 0..n-1 in time order.
ParsedLog parse_chat_log(const std::filesystem::path& path, const std::string& community_id,
                         const Preprocessor& pre);

ChatLog build_chat_log(const std::vector<RawMessage>& messages, const std::string& community_id,
                       const Preprocessor& pre);

void write_skip_report(std::ostream& out, const std::vector<SkipRecord>& skipped);

/// {"time","id","text"} per line; re-parses to the same messages.
void write_messages(std::ostream& out, const ChatLog& log);

/// Preprocessed records: time/id/text plus index, clean_text, tokens, placeholders.
void write_preprocessed(std::ostream& out, const ChatLog& log);

// ---------------------------------------------------------------------------

/// Word-bigram language model with add-one smoothing.
///
/// p(w | v) = (c(v, w) + 1) / (c(v) + V), with a sentence-start history for
/// the first token and V the number of known word types.
class BigramLM {
 public:
    static constexpr const char* kStart = "<s>";

    BigramLM() = default;

    void declare(const std::string& word);
    void add_sentence(const std::vector<std::string>& words);

    std::size_t vocabulary_size() const { return types_.size(); }
    double probability(const std::string& prev, const std::string& word) const;

    /// exp(-(1/N) * sum log p(w_i | w_{i-1})); +inf for an empty sequence.
    double perplexity(const std::vector<std::string>& words) const;

 private:
    std::unordered_map<std::string, std::size_t> types_;
    std::unordered_map<std::string, std::size_t> history_counts_;
    std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>> bigrams_;
};

/// Tokens the language model sees: the cleaned text, stopwords kept.
std::vector<std::string> lm_tokens(const Utterance& u);

BigramLM train_language_model(const ChatLog& log);

double ngram_perplexity(const std::string& text, const BigramLM& lm);

/// Joins b onto a with a single space; keeps a's time, author and index.
Utterance concat_utterances(const Utterance& a, const Utterance& b);

ChatLog merge_broken_utterances(const ChatLog& log, const PreprocessConfig& cfg, const BigramLM& lm);

/// Replaces rare out-of-vocabulary tokens with a frequent vocabulary word at
/// edit distance 1 (most frequent wins, then lexicographic).
void correct_typos(ChatLog& log, std::size_t rare_max = 1, std::size_t frequent_min = 3);

/// Typo correction, language-model training and merging in one pass.
ChatLog ingest(ChatLog log, const PreprocessConfig& cfg);

void reindex(ChatLog& log);

}  // namespace chatmine::corpus
