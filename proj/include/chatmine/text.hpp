#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chatmine::text {

/// True for bracketed placeholder tags such as "[URL]" or "[EMOJI_NEG]".
bool is_placeholder(std::string_view token);

/// Length of a placeholder tag starting at s[pos], or 0 when there is none.
std::size_t placeholder_length(std::string_view s, std::size_t pos);

/// True when every byte is ASCII punctuation.
bool is_punctuation(std::string_view token);

/// Splits on whitespace; ASCII punctuation becomes single-character tokens,
/// placeholder tags stay whole, and an apostrophe between word characters
/// stays inside the word ("can't").
std::vector<std::string> tokenize(std::string_view s);

/// ASCII lowercasing that leaves placeholder tags untouched.
std::string lowercase_outside_placeholders(std::string_view s);

std::string ascii_lower(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// ---------------------------------------------------------------------------
// Lexicon files: "key<TAB>value" per line for maps, one term per line for
// lists. Blank lines and lines starting with '#' are skipped.

std::vector<std::pair<std::string, std::string>> load_tsv_map(const std::filesystem::path& path);
std::vector<std::string> load_term_list(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

/// Suffix-rule lemmatizer driven by a versioned rule table.
///
/// Table lines are either
///   exception<TAB>word<TAB>lemma
///   suffix<TAB>ending<TAB>replacement<TAB>min_stem
/// Exceptions win; otherwise the first suffix rule whose remaining stem is at
/// least `min_stem` bytes long is applied. Placeholders, punctuation and tokens
/// containing digits pass through unchanged.
class Lemmatizer {
 public:
    struct SuffixRule {
        std::string ending;
        std::string replacement;
        std::size_t min_stem = 0;
    };

    Lemmatizer() = default;
    static Lemmatizer from_file(const std::filesystem::path& path);

    void add_exception(std::string word, std::string lemma);
    void add_rule(SuffixRule rule);

    std::string lemmatize(std::string_view token) const;

 private:
    std::map<std::string, std::string, std::less<>> exceptions_;
    std::vector<SuffixRule> rules_;
};

/// Classic Porter stemmer; operates on lowercase ASCII words.
std::string porter_stem(std::string_view word);

/// Levenshtein distance bounded at `limit + 1`.
std::size_t edit_distance(std::string_view a, std::string_view b, std::size_t limit);

}  // namespace chatmine::text
