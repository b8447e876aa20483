#include "chatmine/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "chatmine/error.hpp"

namespace chatmine::corpus {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kPlaceholderCount> kNames = {"URL", "EMAIL", "HTML", "CODE", "ID"};
constexpr std::array<std::string_view, kPlaceholderCount> kTags = {"[URL]", "[EMAIL]", "[HTML]", "[CODE]", "[ID]"};

Placeholder placeholder_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kPlaceholderCount; ++i)
        if (kNames[i] == name) return static_cast<Placeholder>(i);
    throw ConfigError("unknown placeholder kind in rules file: " + name);
}

bool is_ascii_only(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

bool is_space_byte(char c) { return static_cast<unsigned char>(c) < 0x80 && std::isspace(static_cast<unsigned char>(c)); }

bool is_word_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) || c == '_' || c == '\'';
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    for (char c : s) {
        if (is_space_byte(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) out.push_back(' ');
        pending = false;
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::string_view placeholder_name(Placeholder p) { return kNames[static_cast<std::size_t>(p)]; }
std::string_view placeholder_tag(Placeholder p) { return kTags[static_cast<std::size_t>(p)]; }

PreprocessConfig PreprocessConfig::with_resources(const std::filesystem::path& dir) {
    PreprocessConfig cfg;
    cfg.stopwords = dir / "lexicons" / "stopwords.txt";
    cfg.acronyms = dir / "lexicons" / "acronyms.tsv";
    cfg.emoji = dir / "lexicons" / "emoji.tsv";
    cfg.placeholder_rules = dir / "rules" / "placeholders.tsv";
    cfg.lemma_rules = dir / "rules" / "lemma_rules.tsv";
    return cfg;
}

void PreprocessConfig::validate() const {
    if (!(perplexity_threshold > 0.0)) throw ConfigError("perplexity_threshold must be > 0");
    if (!(merge_time_gap_max >= 0.0)) throw ConfigError("merge_time_gap_max must be >= 0");
    for (const auto* p : {&stopwords, &acronyms, &emoji, &placeholder_rules, &lemma_rules}) {
        if (!std::filesystem::exists(*p)) throw ConfigError("lexicon file not found: " + p->string());
    }
}

// ---------------------------------------------------------------------------

Preprocessor::Preprocessor(const PreprocessConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    for (const auto& [name, pattern] : text::load_tsv_map(cfg_.placeholder_rules)) {
        try {
            rules_.push_back({placeholder_from_name(name), std::regex(pattern, std::regex::ECMAScript)});
        } catch (const std::regex_error& e) {
            throw ConfigError("bad placeholder regex for " + name + ": " + e.what());
        }
    }
    for (auto& [k, v] : text::load_tsv_map(cfg_.acronyms)) acronyms_.push_back({text::ascii_lower(k), v});
    std::sort(acronyms_.begin(), acronyms_.end(), [](const Acronym& a, const Acronym& b) { return a.key < b.key; });
    emoji_ = text::load_tsv_map(cfg_.emoji);
    std::stable_sort(emoji_.begin(), emoji_.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    for (const auto& [k, tag] : emoji_) {
        if (!text::is_placeholder(tag)) throw ConfigError("emoji map value is not a tag: " + tag);
    }
    stopwords_ = text::load_term_list(cfg_.stopwords);
    for (auto& w : stopwords_) w = text::ascii_lower(w);
    std::sort(stopwords_.begin(), stopwords_.end());
    lemmatizer_ = text::Lemmatizer::from_file(cfg_.lemma_rules);
}

bool Preprocessor::is_stopword(std::string_view token) const {
    return std::binary_search(stopwords_.begin(), stopwords_.end(), token);
}

std::string Preprocessor::substitute_placeholders(std::string_view s, PlaceholderCounts& hits) const {
    std::string cur(s);
    for (const auto& rule : rules_) {
        std::string out;
        auto begin = std::sregex_iterator(cur.begin(), cur.end(), rule.pattern);
        auto last = cur.cbegin();
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            const auto& m = *it;
            if (m.length(0) == 0) continue;
            out.append(last, m[0].first);
            out.append(" ");
            out.append(placeholder_tag(rule.kind));
            out.append(" ");
            last = m[0].second;
            ++hits[static_cast<std::size_t>(rule.kind)];
        }
        out.append(last, cur.cend());
        cur = std::move(out);
    }
    return cur;
}

std::string Preprocessor::expand_acronyms(std::string_view s) const {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (auto n = text::placeholder_length(s, i); n > 0) {
            out.append(s.substr(i, n));
            i += n;
            continue;
        }
        if (!is_word_char(s[i]) || s[i] == '\'') {
            out.push_back(s[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && is_word_char(s[j])) ++j;
        const auto word = s.substr(i, j - i);
        const auto key = text::ascii_lower(word);
        auto it = std::lower_bound(acronyms_.begin(), acronyms_.end(), key,
                                   [](const Acronym& a, const std::string& k) { return a.key < k; });
        if (it != acronyms_.end() && it->key == key) out.append(it->expansion);
        else out.append(word);
        i = j;
    }
    return out;
}

std::string Preprocessor::normalize_emoji(std::string_view s) const {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        bool matched = false;
        for (const auto& [key, tag] : emoji_) {
            if (key.empty() || s.compare(i, key.size(), key) != 0) continue;
            // ASCII emoticons must stand alone; pictographs match anywhere.
            if (is_ascii_only(key)) {
                const bool left_ok = i == 0 || is_space_byte(s[i - 1]);
                const std::size_t end = i + key.size();
                const bool right_ok = end == s.size() || is_space_byte(s[end]);
                if (!left_ok || !right_ok) continue;
            }
            out.append(" ").append(tag).append(" ");
            i += key.size();
            matched = true;
            break;
        }
        if (!matched) out.push_back(s[i++]);
    }
    return out;
}

std::string Preprocessor::clean(std::string_view raw, PlaceholderCounts* hits) const {
    PlaceholderCounts local{};
    std::string s = substitute_placeholders(raw, local);
    s = expand_acronyms(s);
    s = normalize_emoji(s);
    s = text::lowercase_outside_placeholders(s);
    if (hits) *hits = local;
    return collapse_whitespace(s);
}

std::vector<std::string> Preprocessor::normalize_tokens(std::string_view clean_text) const {
    std::vector<std::string> out;
    for (const auto& tok : text::tokenize(clean_text)) {
        auto lemma = lemmatizer_.lemmatize(tok);
        if (is_stopword(lemma) || is_stopword(tok)) continue;
        out.push_back(std::move(lemma));
    }
    return out;
}

Utterance Preprocessor::preprocess(const RawMessage& raw) const {
    Utterance u;
    u.time = raw.time;
    u.author_id = raw.author_id;
    u.raw_text = raw.text;
    u.clean_text = clean(raw.text, &u.placeholders_hit);
    u.tokens = normalize_tokens(u.clean_text);
    return u;
}

// ---------------------------------------------------------------------------

ParseResult parse_messages(std::istream& in) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::all_of(line.begin(), line.end(), is_space_byte)) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            result.skipped.push_back({line_no, "invalid json"});
            continue;
        }
        auto time = obj.find("time");
        auto id = obj.find("id");
        auto txt = obj.find("text");
        if (time == obj.end() || !time->is_number_integer()) {
            result.skipped.push_back({line_no, "missing or non-integer field: time"});
            continue;
        }
        if (time->get<std::int64_t>() < 0) {
            result.skipped.push_back({line_no, "negative time"});
            continue;
        }
        if (id == obj.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) {
            result.skipped.push_back({line_no, "missing or empty field: id"});
            continue;
        }
        if (txt == obj.end() || !txt->is_string()) {
            result.skipped.push_back({line_no, "missing field: text"});
            continue;
        }
        result.messages.push_back({time->get<std::int64_t>(), id->get<std::string>(), txt->get<std::string>()});
    }
    std::stable_sort(result.messages.begin(), result.messages.end(),
                     [](const RawMessage& a, const RawMessage& b) { return a.time < b.time; });
    return result;
}

ParseResult parse_messages_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read chat log: " + path.string());
    return parse_messages(in);
}

ChatLog build_chat_log(const std::vector<RawMessage>& messages, const std::string& community_id,
                       const Preprocessor& pre) {
    ChatLog log;
    log.community_id = community_id;
    for (const auto& m : messages) {
        if (std::all_of(m.text.begin(), m.text.end(), is_space_byte)) continue;
        log.utterances.push_back(pre.preprocess(m));
    }
    reindex(log);
    return log;
}

ParsedLog parse_chat_log(const std::filesystem::path& path, const std::string& community_id,
                         const Preprocessor& pre) {
    auto parsed = parse_messages_file(path);
    return {build_chat_log(parsed.messages, community_id, pre), std::move(parsed.skipped)};
}

void write_skip_report(std::ostream& out, const std::vector<SkipRecord>& skipped) {
    for (const auto& s : skipped) out << json{{"line_no", s.line_no}, {"reason", s.reason}}.dump() << '\n';
}

void write_messages(std::ostream& out, const ChatLog& log) {
    for (const auto& u : log.utterances)
        out << json{{"time", u.time}, {"id", u.author_id}, {"text", u.raw_text}}.dump() << '\n';
}

void write_preprocessed(std::ostream& out, const ChatLog& log) {
    for (const auto& u : log.utterances) {
        json ph = json::object();
        for (std::size_t k = 0; k < kPlaceholderCount; ++k)
            if (u.placeholders_hit[k]) ph[std::string(kNames[k])] = u.placeholders_hit[k];
        json rec = {{"index", u.index},       {"time", u.time},     {"id", u.author_id}, {"text", u.raw_text},
                    {"clean_text", u.clean_text}, {"tokens", u.tokens}, {"placeholders", ph}};
        out << rec.dump() << '\n';
    }
}

void reindex(ChatLog& log) {
    for (std::size_t i = 0; i < log.utterances.size(); ++i) log.utterances[i].index = i;
}

// ---------------------------------------------------------------------------

void BigramLM::declare(const std::string& word) { types_.try_emplace(word, 0); }

void BigramLM::add_sentence(const std::vector<std::string>& words) {
    std::string prev = kStart;
    for (const auto& w : words) {
        ++types_[w];
        ++history_counts_[prev];
        ++bigrams_[prev][w];
        prev = w;
    }
}

double BigramLM::probability(const std::string& prev, const std::string& word) const {
    const double v = static_cast<double>(std::max<std::size_t>(types_.size(), 1));
    double hist = 0.0, pair = 0.0;
    if (auto h = history_counts_.find(prev); h != history_counts_.end()) hist = static_cast<double>(h->second);
    if (auto b = bigrams_.find(prev); b != bigrams_.end()) {
        if (auto w = b->second.find(word); w != b->second.end()) pair = static_cast<double>(w->second);
    }
    return (pair + 1.0) / (hist + v);
}

double BigramLM::perplexity(const std::vector<std::string>& words) const {
    if (words.empty()) return std::numeric_limits<double>::infinity();
    double log_sum = 0.0;
    std::string prev = kStart;
    for (const auto& w : words) {
        log_sum += std::log(probability(prev, w));
        prev = w;
    }
    return std::exp(-log_sum / static_cast<double>(words.size()));
}

std::vector<std::string> lm_tokens(const Utterance& u) { return text::tokenize(u.clean_text); }

BigramLM train_language_model(const ChatLog& log) {
    BigramLM lm;
    for (const auto& u : log.utterances) lm.add_sentence(lm_tokens(u));
    return lm;
}

double ngram_perplexity(const std::string& text_in, const BigramLM& lm) {
    return lm.perplexity(text::tokenize(text_in));
}

Utterance concat_utterances(const Utterance& a, const Utterance& b) {
    Utterance m = a;
    m.raw_text = a.raw_text + " " + b.raw_text;
    m.clean_text = a.clean_text.empty() ? b.clean_text
                   : b.clean_text.empty() ? a.clean_text
                                          : a.clean_text + " " + b.clean_text;
    m.tokens.insert(m.tokens.end(), b.tokens.begin(), b.tokens.end());
    for (std::size_t k = 0; k < kPlaceholderCount; ++k) m.placeholders_hit[k] += b.placeholders_hit[k];
    return m;
}

ChatLog merge_broken_utterances(const ChatLog& log, const PreprocessConfig& cfg, const BigramLM& lm) {
    ChatLog out;
    out.community_id = log.community_id;
    if (log.utterances.empty()) return out;
    const auto gap_ms = static_cast<double>(cfg.merge_time_gap_max) * 1000.0;

    Utterance cur = log.utterances.front();
    for (std::size_t i = 1; i < log.utterances.size(); ++i) {
        const Utterance& next = log.utterances[i];
        bool merge = false;
        // Time gap is measured from the most recent piece, not the merged start.
        const auto prev_time = log.utterances[i - 1].time;
        if (next.author_id == cur.author_id && static_cast<double>(next.time - prev_time) <= gap_ms) {
            const Utterance joined = concat_utterances(cur, next);
            const double pj = lm.perplexity(lm_tokens(joined));
            const double pa = lm.perplexity(lm_tokens(cur));
            const double pb = lm.perplexity(lm_tokens(next));
            merge = pj < cfg.perplexity_threshold && pj < std::min(pa, pb);
            if (merge) cur = joined;
        }
        if (!merge) {
            out.utterances.push_back(std::move(cur));
            cur = next;
        }
    }
    out.utterances.push_back(std::move(cur));
    reindex(out);
    return out;
}

void correct_typos(ChatLog& log, std::size_t rare_max, std::size_t frequent_min) {
    auto eligible = [](const std::string& t) {
        if (text::is_placeholder(t) || text::is_punctuation(t)) return false;
        return std::none_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    };
    std::map<std::string, std::size_t> freq;
    for (const auto& u : log.utterances)
        for (const auto& t : u.tokens)
            if (eligible(t)) ++freq[t];

    std::vector<std::pair<std::string, std::size_t>> frequent;
    for (const auto& [w, c] : freq)
        if (c >= frequent_min) frequent.emplace_back(w, c);

    std::map<std::string, std::string> fixes;
    for (const auto& [w, c] : freq) {
        if (c > rare_max || w.size() < 4) continue;
        const std::pair<std::string, std::size_t>* best = nullptr;
        for (const auto& cand : frequent) {
            if (text::edit_distance(w, cand.first, 1) != 1) continue;
            if (!best || cand.second > best->second) best = &cand;  // map order keeps ties lexicographic
        }
        if (best) fixes[w] = best->first;
    }
    if (fixes.empty()) return;
    for (auto& u : log.utterances)
        for (auto& t : u.tokens)
            if (auto it = fixes.find(t); it != fixes.end()) t = it->second;
}

ChatLog ingest(ChatLog log, const PreprocessConfig& cfg) {
    if (cfg.typo_correction) correct_typos(log);
    const BigramLM lm = train_language_model(log);
    return merge_broken_utterances(log, cfg, lm);
}

}  // namespace chatmine::corpus
