#include "chatmine/disentangler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "chatmine/checkpoint.hpp"
#include "chatmine/error.hpp"

namespace chatmine::disentangle {

using corpus::ChatLog;
using nlohmann::json;

namespace {

enum Feature : std::size_t {
    kSelfLink = 0,
    kGapBucket = 1,            // 10 buckets
    kDistBucket = 11,          // 8 buckets
    kSameAuthor = 19,
    kChildMentionsParent = 20,
    kParentMentionsChild = 21,
    kChildMentionsAny = 22,
    kParentMentionsAny = 23,
    kChildPrevGapBucket = 24,  // 5 buckets
    kParentLatestByAuthor = 29,
    kParentIsChildPrev = 30,
    kSharedBucket = 31,        // 6 buckets
    kJaccard = 37,
    kJaccardBucket = 38,       // 5 buckets
    kParentLenBucket = 43,     // 5 buckets
    kChildLenBucket = 48,      // 5 buckets
    kParentQuestion = 53,
    kChildQuestion = 54,
    kParentStartsWh = 55,
    kChildGreeting = 56,
    kChildThanks = 57,
    kParentThanks = 58,
    kHourMatch = 59,
    kSameDay = 60,
    kBetweenAuthorsBucket = 61,  // 4 buckets
    kChildAuthorSeen = 65,
    kBothCode = 66,
    kBothUrl = 67,
    kChildCode = 68,
    kParentCode = 69,
    kLogGap = 70,
    kLogDist = 71,
    kChildStartsMention = 72,
    kParentAuthorBetween = 73,
    kChildAuthorBetween = 74,
    kLengthRatio = 75,
    kPairBias = 76,
};

std::size_t bucket_of(double x, std::initializer_list<double> upper_bounds) {
    std::size_t b = 0;
    for (double ub : upper_bounds) {
        if (x < ub) return b;
        ++b;
    }
    return b;
}

std::vector<std::string> extract_mentions(const std::string& raw) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '@') continue;
        if (i > 0) {
            const auto p = static_cast<unsigned char>(raw[i - 1]);
            if (std::isalnum(p) || p == '_' || p == '.') continue;  // part of an email address
        }
        std::size_t j = i + 1;
        while (j < raw.size()) {
            const auto c = static_cast<unsigned char>(raw[j]);
            if (!(std::isalnum(c) || c == '_' || c == '-' || c == '.')) break;
            ++j;
        }
        while (j > i + 1 && raw[j - 1] == '.') --j;
        if (j > i + 1) out.push_back(text::ascii_lower(raw.substr(i + 1, j - i - 1)));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool first_word_in(const std::string& clean, std::initializer_list<std::string_view> words) {
    const auto toks = text::tokenize(clean);
    for (const auto& t : toks) {
        if (text::is_punctuation(t)) continue;
        return std::find(words.begin(), words.end(), t) != words.end();
    }
    return false;
}

std::int64_t hour_of_day(std::int64_t ms) { return (ms / 3'600'000) % 24; }
std::int64_t day_of(std::int64_t ms) { return ms / 86'400'000; }

}  // namespace

void LinkConfig::validate() const {
    if (feature_dim < 1) throw ConfigError("link feature dimension must be >= 1");
    if (lookback < 1) throw ConfigError("link lookback must be >= 1");
    if (hidden < 1) throw ConfigError("link hidden width must be >= 1");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("link threshold must be in [0, 1]");
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n(kBaseFeatureCount);
        n[kSelfLink] = "self_link";
        const char* gaps[] = {"gap_lt5s", "gap_lt15s", "gap_lt30s", "gap_lt1m", "gap_lt2m",
                              "gap_lt5m", "gap_lt10m", "gap_lt30m", "gap_lt1h", "gap_ge1h"};
        for (std::size_t i = 0; i < 10; ++i) n[kGapBucket + i] = gaps[i];
        const char* dists[] = {"dist_1", "dist_2", "dist_3", "dist_4", "dist_5", "dist_6_10", "dist_11_20", "dist_gt20"};
        for (std::size_t i = 0; i < 8; ++i) n[kDistBucket + i] = dists[i];
        n[kSameAuthor] = "same_author";
        n[kChildMentionsParent] = "child_mentions_parent_author";
        n[kParentMentionsChild] = "parent_mentions_child_author";
        n[kChildMentionsAny] = "child_mentions_anyone";
        n[kParentMentionsAny] = "parent_mentions_anyone";
        const char* prev[] = {"child_prev_none", "child_prev_lt1m", "child_prev_lt5m", "child_prev_lt30m",
                              "child_prev_ge30m"};
        for (std::size_t i = 0; i < 5; ++i) n[kChildPrevGapBucket + i] = prev[i];
        n[kParentLatestByAuthor] = "parent_latest_by_its_author";
        n[kParentIsChildPrev] = "parent_is_child_authors_previous";
        const char* shared[] = {"shared_0", "shared_1", "shared_2", "shared_3", "shared_4_5", "shared_ge6"};
        for (std::size_t i = 0; i < 6; ++i) n[kSharedBucket + i] = shared[i];
        n[kJaccard] = "jaccard";
        const char* jac[] = {"jaccard_0", "jaccard_le_0.1", "jaccard_le_0.25", "jaccard_le_0.5", "jaccard_gt_0.5"};
        for (std::size_t i = 0; i < 5; ++i) n[kJaccardBucket + i] = jac[i];
        const char* lens[] = {"len_0_2", "len_3_5", "len_6_10", "len_11_20", "len_gt20"};
        for (std::size_t i = 0; i < 5; ++i) {
            n[kParentLenBucket + i] = std::string("parent_") + lens[i];
            n[kChildLenBucket + i] = std::string("child_") + lens[i];
        }
        n[kParentQuestion] = "parent_has_question";
        n[kChildQuestion] = "child_has_question";
        n[kParentStartsWh] = "parent_starts_5w1h";
        n[kChildGreeting] = "child_greeting";
        n[kChildThanks] = "child_thanks";
        n[kParentThanks] = "parent_thanks";
        n[kHourMatch] = "hour_of_day_match";
        n[kSameDay] = "same_day";
        const char* between[] = {"authors_between_0", "authors_between_1", "authors_between_2", "authors_between_ge3"};
        for (std::size_t i = 0; i < 4; ++i) n[kBetweenAuthorsBucket + i] = between[i];
        n[kChildAuthorSeen] = "child_author_seen_before";
        n[kBothCode] = "both_code";
        n[kBothUrl] = "both_url";
        n[kChildCode] = "child_has_code";
        n[kParentCode] = "parent_has_code";
        n[kLogGap] = "log_gap";
        n[kLogDist] = "log_distance";
        n[kChildStartsMention] = "child_starts_with_mention";
        n[kParentAuthorBetween] = "parent_author_posted_between";
        n[kChildAuthorBetween] = "child_author_posted_between";
        n[kLengthRatio] = "length_ratio";
        n[kPairBias] = "pair_bias";
        return n;
    }();
    return names;
}

// ---------------------------------------------------------------------------

LinkFeatureExtractor::LinkFeatureExtractor(const ChatLog& log, LinkConfig cfg) : log_(log), cfg_(cfg) {
    cfg_.validate();
    info_.reserve(log.size());
    for (const auto& u : log.utterances) {
        Info in;
        for (const auto& t : u.tokens)
            if (!text::is_punctuation(t)) in.token_set.push_back(t);
        in.token_count = in.token_set.size();
        std::sort(in.token_set.begin(), in.token_set.end());
        in.token_set.erase(std::unique(in.token_set.begin(), in.token_set.end()), in.token_set.end());
        in.mentions = extract_mentions(u.raw_text);
        in.question = u.clean_text.find('?') != std::string::npos;
        in.starts_wh = first_word_in(u.clean_text, {"what", "why", "when", "who", "which", "how"});
        in.greeting = first_word_in(u.clean_text, {"hi", "hello", "hey", "greetings", "morning", "howdy"});
        in.thanks = u.clean_text.find("thank") != std::string::npos;
        in.code = u.placeholders_hit[static_cast<std::size_t>(corpus::Placeholder::kCode)] > 0;
        in.url = u.placeholders_hit[static_cast<std::size_t>(corpus::Placeholder::kUrl)] > 0;
        std::size_t first = u.raw_text.find_first_not_of(" \t");
        in.starts_mention = first != std::string::npos && u.raw_text[first] == '@';
        info_.push_back(std::move(in));
    }
}

bool LinkFeatureExtractor::mentions(std::size_t who, const std::string& author) const {
    const auto& m = info_[who].mentions;
    return std::binary_search(m.begin(), m.end(), text::ascii_lower(author));
}

LinkFeatureVector LinkFeatureExtractor::extract(std::size_t child, std::size_t parent) const {
    CHATMINE_REQUIRE(child < log_.size(), "link child index out of range");
    const bool self = parent == kSelf;
    if (!self) {
        CHATMINE_REQUIRE(parent < child, "link parent must precede the child");
        CHATMINE_REQUIRE(child - parent <= cfg_.lookback, "link parent outside the lookback window");
    }
    std::vector<double> f(kBaseFeatureCount, 0.0);
    const auto& cu = log_[child];
    const Info& ci = info_[child];

    // Child-only features are present for every candidate, SELF included.
    f[kChildMentionsAny] = ci.mentions.empty() ? 0.0 : 1.0;
    f[kChildQuestion] = ci.question;
    f[kChildGreeting] = ci.greeting;
    f[kChildThanks] = ci.thanks;
    f[kChildCode] = ci.code;
    f[kChildStartsMention] = ci.starts_mention;
    f[kChildLenBucket + bucket_of(static_cast<double>(ci.token_count), {3, 6, 11, 21})] = 1.0;
    {
        const std::size_t lo = child > cfg_.lookback ? child - cfg_.lookback : 0;
        std::size_t prev = kSelf;
        for (std::size_t j = child; j-- > lo;) {
            if (log_[j].author_id == cu.author_id) {
                prev = j;
                break;
            }
        }
        if (prev == kSelf) {
            f[kChildPrevGapBucket] = 1.0;
        } else {
            const double gap = static_cast<double>(cu.time - log_[prev].time) / 1000.0;
            f[kChildPrevGapBucket + 1 + bucket_of(gap, {60, 300, 1800})] = 1.0;
            f[kChildAuthorSeen] = 1.0;
        }
    }

    if (self) {
        f[kSelfLink] = 1.0;
    } else {
        const auto& pu = log_[parent];
        const Info& pi = info_[parent];
        const double gap_s = std::max(0.0, static_cast<double>(cu.time - pu.time) / 1000.0);
        const std::size_t dist = child - parent;
        f[kGapBucket + bucket_of(gap_s, {5, 15, 30, 60, 120, 300, 600, 1800, 3600})] = 1.0;
        f[kDistBucket + bucket_of(static_cast<double>(dist), {2, 3, 4, 5, 6, 11, 21})] = 1.0;
        f[kSameAuthor] = cu.author_id == pu.author_id;
        f[kChildMentionsParent] = mentions(child, pu.author_id);
        f[kParentMentionsChild] = mentions(parent, cu.author_id);
        f[kParentMentionsAny] = pi.mentions.empty() ? 0.0 : 1.0;

        bool parent_latest = true, child_prev = false, parent_between = false, child_between = false;
        std::vector<std::string> between_authors;
        for (std::size_t j = parent + 1; j < child; ++j) {
            const auto& a = log_[j].author_id;
            if (a == pu.author_id) parent_latest = false, parent_between = true;
            if (a == cu.author_id) child_between = true;
            between_authors.push_back(a);
        }
        if (cu.author_id == pu.author_id && !child_between) child_prev = true;
        std::sort(between_authors.begin(), between_authors.end());
        between_authors.erase(std::unique(between_authors.begin(), between_authors.end()), between_authors.end());
        f[kParentLatestByAuthor] = parent_latest;
        f[kParentIsChildPrev] = child_prev;
        f[kParentAuthorBetween] = parent_between;
        f[kChildAuthorBetween] = child_between;
        f[kBetweenAuthorsBucket + std::min<std::size_t>(between_authors.size(), 3)] = 1.0;

        std::vector<std::string> shared;
        std::set_intersection(ci.token_set.begin(), ci.token_set.end(), pi.token_set.begin(), pi.token_set.end(),
                              std::back_inserter(shared));
        const std::size_t uni = ci.token_set.size() + pi.token_set.size() - shared.size();
        const double jac = uni == 0 ? 0.0 : static_cast<double>(shared.size()) / static_cast<double>(uni);
        f[kSharedBucket + bucket_of(static_cast<double>(shared.size()), {1, 2, 3, 4, 6})] = 1.0;
        f[kJaccard] = jac;
        f[kJaccardBucket + (jac == 0.0 ? 0 : 1 + bucket_of(jac, {0.1 + 1e-12, 0.25 + 1e-12, 0.5 + 1e-12}))] = 1.0;
        f[kParentLenBucket + bucket_of(static_cast<double>(pi.token_count), {3, 6, 11, 21})] = 1.0;
        f[kParentQuestion] = pi.question;
        f[kParentStartsWh] = pi.starts_wh;
        f[kParentThanks] = pi.thanks;
        f[kHourMatch] = hour_of_day(cu.time) == hour_of_day(pu.time);
        f[kSameDay] = day_of(cu.time) == day_of(pu.time);
        f[kBothCode] = ci.code && pi.code;
        f[kBothUrl] = ci.url && pi.url;
        f[kParentCode] = pi.code;
        f[kLogGap] = std::min(1.0, std::log1p(gap_s) / std::log1p(86400.0));
        f[kLogDist] = std::log1p(static_cast<double>(dist)) / std::log1p(static_cast<double>(cfg_.lookback));
        const auto lmin = std::min(ci.token_count, pi.token_count), lmax = std::max(ci.token_count, pi.token_count);
        f[kLengthRatio] = lmax == 0 ? 0.0 : static_cast<double>(lmin) / static_cast<double>(lmax);
        f[kPairBias] = 1.0;
    }
    f.resize(cfg_.feature_dim, 0.0);
    return {std::move(f)};
}

LinkFeatureVector extract_link_features(const ChatLog& log, std::size_t child, std::size_t parent,
                                        const LinkConfig& cfg) {
    return LinkFeatureExtractor(log, cfg).extract(child, parent);
}

// ---------------------------------------------------------------------------

LinkScorer::LinkScorer(LinkConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    params_.add("link.w1", {cfg_.hidden, cfg_.feature_dim});
    params_.add("link.b1", {cfg_.hidden});
    params_.add("link.w2", {1, cfg_.hidden});
    params_.add("link.b2", {1});
}

void LinkScorer::initialize(nn::Rng& rng) {
    nn::glorot_uniform(params_.get("link.w1").value, cfg_.feature_dim, cfg_.hidden, rng);
    nn::glorot_uniform(params_.get("link.w2").value, cfg_.hidden, 1, rng);
    params_.get("link.b1").value.fill(0.0);
    params_.get("link.b2").value.fill(0.0);
}

nn::Var LinkScorer::logit(nn::Tape& tape, const LinkFeatureVector& f) {
    CHATMINE_REQUIRE(f.values.size() == cfg_.feature_dim, "link feature dimension does not match the scorer");
    auto x = tape.constant(nn::Tensor::vector(f.values));
    auto h = nn::softsign(tape, nn::linear(tape, x, tape.parameter(params_.get("link.w1")),
                                           tape.parameter(params_.get("link.b1"))));
    return nn::linear(tape, h, tape.parameter(params_.get("link.w2")), tape.parameter(params_.get("link.b2")));
}

double LinkScorer::score(const LinkFeatureVector& f) const {
    CHATMINE_REQUIRE(f.values.size() == cfg_.feature_dim, "link feature dimension does not match the scorer");
    const auto& w1 = params_.get("link.w1").value;
    const auto& b1 = params_.get("link.b1").value;
    const auto& w2 = params_.get("link.w2").value;
    const double b2 = params_.get("link.b2").value.data[0];
    double z = b2;
    for (std::size_t i = 0; i < cfg_.hidden; ++i) {
        double a = b1.data[i];
        const auto row = w1.row(i);
        for (std::size_t j = 0; j < cfg_.feature_dim; ++j) a += row[j] * f.values[j];
        z += w2.data[i] * nn::softsign_value(a);
    }
    return nn::sigmoid_value(z);
}

void LinkScorer::save(const std::filesystem::path& path) const {
    json meta = {{"target", "link"},
                 {"feature_dim", cfg_.feature_dim},
                 {"lookback", cfg_.lookback},
                 {"hidden", cfg_.hidden},
                 {"threshold", cfg_.threshold}};
    nn::save_checkpoint(path, params_, meta);
}

LinkScorer LinkScorer::load(const std::filesystem::path& path) {
    const auto ckpt = nn::load_checkpoint(path);
    if (ckpt.meta.value("target", std::string()) != "link")
        throw ConfigError("checkpoint is not a link scorer: " + path.string());
    LinkConfig cfg;
    cfg.feature_dim = ckpt.meta.at("feature_dim").get<std::size_t>();
    cfg.lookback = ckpt.meta.at("lookback").get<std::size_t>();
    cfg.hidden = ckpt.meta.at("hidden").get<std::size_t>();
    cfg.threshold = ckpt.meta.at("threshold").get<double>();
    LinkScorer s(cfg);
    nn::restore_parameters(ckpt, s.params_);
    return s;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> choose_parents(std::size_t n, const ScoreFn& score, std::size_t lookback, double threshold) {
    std::vector<std::size_t> parents(n, kSelf);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t best = kSelf;
        double best_score = score(c, kSelf);
        const std::size_t lo = c > lookback ? c - lookback : 0;
        // Walk from the most recent candidate backwards; strict > keeps ties on the more recent one.
        for (std::size_t p = c; p-- > lo;) {
            const double s = score(c, p);
            if (s > best_score) {
                best_score = s;
                best = p;
            }
        }
        parents[c] = best_score < threshold ? kSelf : best;
    }
    return parents;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& up, std::size_t x) {
    while (up[x] != x) {
        up[x] = up[up[x]];
        x = up[x];
    }
    return x;
}

}  // namespace

Dialog make_dialog(const ChatLog& log, std::vector<std::size_t> members) {
    CHATMINE_REQUIRE(!members.empty(), "dialog needs at least one member");
    CHATMINE_REQUIRE(std::is_sorted(members.begin(), members.end()) &&
                         std::adjacent_find(members.begin(), members.end()) == members.end(),
                     "dialog members must be strictly increasing");
    CHATMINE_REQUIRE(members.back() < log.size(), "dialog member outside the log");
    Dialog d;
    d.subject_id = members.front();
    d.members = std::move(members);
    return split_head_body(log, std::move(d));
}

Dialog split_head_body(const ChatLog& log, Dialog d) {
    CHATMINE_REQUIRE(!d.members.empty(), "dialog needs at least one member");
    d.initiator_id = log[d.members.front()].author_id;
    d.head_sources.clear();
    d.body.clear();
    std::size_t i = 0;
    while (i < d.members.size() && log[d.members[i]].author_id == d.initiator_id) d.head_sources.push_back(d.members[i++]);
    for (; i < d.members.size(); ++i) d.body.push_back(d.members[i]);
    d.head = log[d.head_sources.front()];
    for (std::size_t k = 1; k < d.head_sources.size(); ++k) d.head = corpus::concat_utterances(d.head, log[d.head_sources[k]]);
    return d;
}

std::vector<Dialog> dialogs_from_parents(const ChatLog& log, const std::vector<std::size_t>& parents) {
    CHATMINE_REQUIRE(parents.size() == log.size(), "one parent per utterance expected");
    std::vector<std::size_t> up(log.size());
    std::iota(up.begin(), up.end(), 0);
    for (std::size_t c = 0; c < parents.size(); ++c) {
        if (parents[c] == kSelf) continue;
        CHATMINE_REQUIRE(parents[c] < c, "parent must precede child");
        up[find_root(up, c)] = find_root(up, parents[c]);
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < log.size(); ++i) groups[find_root(up, i)].push_back(i);
    std::vector<Dialog> out;
    out.reserve(groups.size());
    for (auto& [root, members] : groups) out.push_back(make_dialog(log, std::move(members)));
    std::sort(out.begin(), out.end(), [](const Dialog& a, const Dialog& b) { return a.subject_id < b.subject_id; });
    return out;
}

std::vector<Dialog> assemble_dialogs(const ChatLog& log, const ScoreFn& score, std::size_t lookback,
                                     double threshold) {
    return dialogs_from_parents(log, choose_parents(log.size(), score, lookback, threshold));
}

std::vector<Dialog> assemble_dialogs(const ChatLog& log, const LinkScorer& scorer, double threshold) {
    LinkFeatureExtractor fx(log, scorer.config());
    return assemble_dialogs(
        log, [&](std::size_t c, std::size_t p) { return scorer.score(fx.extract(c, p)); }, scorer.config().lookback,
        threshold);
}

std::vector<Dialog> assemble_dialogs(const ChatLog& log, const LinkScorer& scorer) {
    return assemble_dialogs(log, scorer, scorer.config().threshold);
}

void write_dialogs(std::ostream& out, const std::vector<Dialog>& dialogs) {
    for (const auto& d : dialogs) {
        out << json{{"subject_id", d.subject_id},
                    {"member_indexes", d.members},
                    {"head_text", d.head.raw_text},
                    {"initiator_id", d.initiator_id}}
                   .dump()
            << '\n';
    }
}

// ---------------------------------------------------------------------------

ThreadedLog interleave_threads(const std::vector<std::vector<corpus::Utterance>>& threads, nn::Rng& rng,
                               std::int64_t start_time_ms) {
    ThreadedLog out;
    std::vector<std::size_t> cursor(threads.size(), 0), last_index(threads.size(), kSelf);
    std::size_t remaining = 0;
    for (const auto& t : threads) remaining += t.size();
    std::int64_t now = start_time_ms;
    while (remaining > 0) {
        // Weight threads by what they still have so long threads do not trail at the end.
        std::size_t pick = rng.index(remaining);
        std::size_t which = 0;
        for (; which < threads.size(); ++which) {
            const std::size_t left = threads[which].size() - cursor[which];
            if (pick < left) break;
            pick -= left;
        }
        corpus::Utterance u = threads[which][cursor[which]++];
        now += static_cast<std::int64_t>(5000 + rng.index(85000));
        u.time = now;
        out.gold_parent.push_back(last_index[which]);
        last_index[which] = out.log.utterances.size();
        out.thread_of.push_back(which);
        out.log.utterances.push_back(std::move(u));
        --remaining;
    }
    corpus::reindex(out.log);
    return out;
}

LinkTrainReport train_link_scorer(LinkScorer& scorer, const std::vector<ThreadedLog>& data, const LinkTrainConfig& cfg) {
    struct Example {
        LinkFeatureVector f;
        std::size_t label;
    };
    nn::Rng rng(cfg.seed);
    std::vector<Example> examples;
    for (const auto& tl : data) {
        LinkFeatureExtractor fx(tl.log, scorer.config());
        const std::size_t lookback = scorer.config().lookback;
        for (std::size_t c = 0; c < tl.log.size(); ++c) {
            const std::size_t gold = tl.gold_parent[c];
            if (gold != kSelf && c - gold > lookback) continue;
            examples.push_back({fx.extract(c, gold), 1});
            std::vector<std::size_t> negatives;
            if (gold != kSelf) negatives.push_back(kSelf);
            for (std::size_t p = c > lookback ? c - lookback : 0; p < c; ++p)
                if (p != gold) negatives.push_back(p);
            rng.shuffle(negatives);
            if (negatives.size() > cfg.negatives_per_child) negatives.resize(cfg.negatives_per_child);
            for (auto p : negatives) examples.push_back({fx.extract(c, p), 0});
        }
    }
    if (examples.empty()) throw DataError("no link training examples");

    nn::Adam adam(scorer.params(), cfg.adam);
    LinkTrainReport report;
    report.examples = examples.size();
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            nn::Tape tape;
            std::vector<nn::Var> losses;
            for (std::size_t k = start; k < end; ++k) {
                const auto& ex = examples[order[k]];
                auto z = scorer.logit(tape, ex.f);
                auto logits = nn::concat(tape, {tape.constant(nn::Tensor::vector({0.0})), z});
                losses.push_back(nn::softmax_cross_entropy(tape, logits, ex.label));
            }
            auto loss = nn::sum(tape, losses, 1.0 / static_cast<double>(losses.size()));
            total += tape.value(loss).data[0] * static_cast<double>(losses.size());
            tape.backward(loss);
            adam.step();
        }
        report.epoch_loss.push_back(total / static_cast<double>(examples.size()));
    }
    return report;
}

}  // namespace chatmine::disentangle
