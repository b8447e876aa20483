#include "chatmine/dialog_embed.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "chatmine/error.hpp"

namespace chatmine::embed {

using corpus::Utterance;
using nn::Tape;
using nn::Tensor;
using nn::Var;

nn::Var LeafSource::operator()(nn::Tape& t, const std::string& name) const {
    if (trainable) return t.parameter(trainable->get(name));
    CHATMINE_REQUIRE(frozen != nullptr, "leaf source has no parameters");
    return t.view(frozen->get(name).value);
}

// ---------------------------------------------------------------------------

void ConvStackSpec::validate(std::size_t input_len) const {
    if (kernels.empty()) throw ConfigError("conv stack needs at least one stage");
    if (kernel_size < 1) throw ConfigError("conv kernel size must be >= 1");
    std::size_t len = input_len;
    for (std::size_t s = 0; s < kernels.size(); ++s) {
        if (kernels[s] < 1) throw ConfigError("conv stage " + std::to_string(s + 1) + " has no kernels");
        if (len < kernel_size)
            throw ConfigError("conv stage " + std::to_string(s + 1) + " input length " + std::to_string(len) +
                              " is shorter than kernel size " + std::to_string(kernel_size));
        len = kernels[s];
    }
}

void add_conv_parameters(nn::ParameterSet& params, const ConvStackSpec& spec) {
    for (std::size_t s = 0; s < spec.kernels.size(); ++s) {
        const std::string p = "conv" + std::to_string(s + 1);
        params.add(p + ".K", {spec.kernels[s], spec.kernel_size});
        params.add(p + ".b", {spec.kernels[s]});
    }
}

void init_conv_parameters(nn::ParameterSet& params, const ConvStackSpec& spec, nn::Rng& rng) {
    for (std::size_t s = 0; s < spec.kernels.size(); ++s) {
        const std::string p = "conv" + std::to_string(s + 1);
        nn::glorot_uniform(params.get(p + ".K").value, spec.kernel_size, spec.kernels[s], rng);
        params.get(p + ".b").value.fill(0.0);
    }
}

Var conv_stack(Tape& t, Var x, const ConvStackSpec& spec, const LeafSource& leaves, double dropout, nn::Rng* rng,
               bool training) {
    CHATMINE_REQUIRE(!training || rng != nullptr, "training the conv stack needs a generator");
    Var h = x;
    for (std::size_t s = 0; s < spec.kernels.size(); ++s) {
        const std::string p = "conv" + std::to_string(s + 1);
        h = nn::conv1d_maxpool(t, h, leaves(t, p + ".K"), leaves(t, p + ".b"));
        if (training && dropout > 0.0) h = nn::dropout(t, h, dropout, *rng, true);
    }
    return h;
}

// ---------------------------------------------------------------------------

double gaussian_factor(std::size_t slot, std::size_t center, std::size_t k) {
    if (slot == center) return 1.0;
    if (k == 0) return 0.0;
    const double diff = static_cast<double>(slot) - static_cast<double>(center);
    return std::exp(-(diff * diff) / (2.0 * static_cast<double>(k * k)));
}

Var local_attention(Tape& t, Var window, const std::vector<bool>& pad, Var WQ, Var WK, Var WV, AttentionTrace* trace) {
    const Tensor& win = t.value(window);
    const Tensor& wq = t.value(WQ);
    const Tensor& wk = t.value(WK);
    const Tensor& wv = t.value(WV);
    CHATMINE_REQUIRE(win.rank() == 2 && win.rows() % 2 == 1, "local attention window must be [2k+1, d]");
    const std::size_t slots = win.rows(), d = win.cols(), center = slots / 2, k = center;
    CHATMINE_REQUIRE(pad.size() == slots, "pad mask length must match the window");
    CHATMINE_REQUIRE(!pad[center], "the window center cannot be padding");
    CHATMINE_REQUIRE(wq.rank() == 2 && wq.cols() == d && wk.shape == wq.shape && wv.shape == wq.shape,
                     "attention projections must all be [delta, d]");
    const std::size_t delta = wq.rows();

    auto project = [d](const Tensor& w, std::span<const double> u) {
        std::vector<double> y(w.rows(), 0.0);
        for (std::size_t r = 0; r < w.rows(); ++r) {
            const double* wr = w.data.data() + r * d;
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += wr[j] * u[j];
            y[r] = acc;
        }
        return y;
    };

    std::vector<double> hq = project(wq, win.row(center));
    std::vector<std::vector<double>> hk(slots), hv(slots);
    std::vector<double> gauss(slots, 0.0), score(slots, 0.0), weight(slots, 0.0);
    double total = 0.0, magnitude = 0.0;
    std::size_t live = 0;
    for (std::size_t s = 0; s < slots; ++s) {
        if (pad[s]) continue;
        ++live;
        hk[s] = project(wk, win.row(s));
        hv[s] = project(wv, win.row(s));
        double dot = 0.0;
        for (std::size_t r = 0; r < delta; ++r) dot += hq[r] * hk[s][r];
        gauss[s] = gaussian_factor(s, center, k);
        score[s] = dot * gauss[s];
        total += score[s];
        magnitude += std::abs(score[s]);
    }
    const bool fallback = !(total > 1e-2 * magnitude) || total <= 0.0;
    for (std::size_t s = 0; s < slots; ++s) {
        if (pad[s]) continue;
        weight[s] = fallback ? 1.0 / static_cast<double>(live) : score[s] / total;
    }

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    Tensor ctx({delta});
    for (std::size_t s = 0; s < slots; ++s) {
        if (pad[s]) continue;
        for (std::size_t r = 0; r < delta; ++r) ctx.data[r] += weight[s] * hv[s][r] * inv_sqrt_d;
    }
    if (trace) *trace = {score, gauss, weight, fallback};

    return t.push(std::move(ctx), [window, WQ, WK, WV, pad, slots, d, center, delta, hq = std::move(hq),
                                   hk = std::move(hk), hv = std::move(hv), gauss = std::move(gauss),
                                   weight = std::move(weight), total, fallback, inv_sqrt_d, out = t.size()](Tape& tp) {
        const Tensor gc = tp.grad({out});
        const Tensor& win = tp.value(window);
        const Tensor& wq = tp.value(WQ);
        const Tensor& wk = tp.value(WK);
        const Tensor& wv = tp.value(WV);

        std::vector<double> ghq(delta, 0.0);
        std::vector<std::vector<double>> ghk(slots), ghv(slots);
        std::vector<double> ga(slots, 0.0);
        double ga_dot_a = 0.0;
        for (std::size_t s = 0; s < slots; ++s) {
            if (pad[s]) continue;
            ghv[s].assign(delta, 0.0);
            double acc = 0.0;
            for (std::size_t r = 0; r < delta; ++r) {
                ghv[s][r] = weight[s] * gc.data[r] * inv_sqrt_d;
                acc += hv[s][r] * gc.data[r] * inv_sqrt_d;
            }
            ga[s] = acc;
            ga_dot_a += acc * weight[s];
        }
        if (!fallback) {
            // a_s = score_s / S  =>  d score_s = (ga_s - sum_t ga_t a_t) / S
            for (std::size_t s = 0; s < slots; ++s) {
                if (pad[s]) continue;
                const double gscore = (ga[s] - ga_dot_a) / total;
                const double gdot = gscore * gauss[s];
                ghk[s].assign(delta, 0.0);
                for (std::size_t r = 0; r < delta; ++r) {
                    ghq[r] += gdot * hk[s][r];
                    ghk[s][r] = gdot * hq[r];
                }
            }
        }

        // Back through the projections h = W u.
        auto back = [d, delta](const std::vector<double>& gh, const Tensor& w, std::span<const double> u, Tensor& gw,
                               std::span<double> gu) {
            for (std::size_t r = 0; r < delta; ++r) {
                const double g = gh[r];
                if (g == 0.0) continue;
                double* gwr = gw.data.data() + r * d;
                const double* wr = w.data.data() + r * d;
                for (std::size_t j = 0; j < d; ++j) {
                    gwr[j] += g * u[j];
                    gu[j] += g * wr[j];
                }
            }
        };
        Tensor& gwin = tp.grad(window);
        back(ghq, wq, win.row(center), tp.grad(WQ), gwin.row(center));
        for (std::size_t s = 0; s < slots; ++s) {
            if (pad[s]) continue;
            if (!ghk[s].empty()) back(ghk[s], wk, win.row(s), tp.grad(WK), gwin.row(s));
            back(ghv[s], wv, win.row(s), tp.grad(WV), gwin.row(s));
        }
    });
}

// ---------------------------------------------------------------------------

const std::array<const char*, kHeuristicDim>& heuristic_names() {
    static const std::array<const char*, kHeuristicDim> names = {
        "what", "why", "when", "where", "who", "how",
        "question_mark", "exclamation_mark",
        "greeting", "disapproval",
        "mention_simi", "mention_same",
        "NT", "NUT", "NST",
        "AP", "RP",
        "TDH", "TDU",
        "SS_pos", "SS_neu", "SS_neg",
        "SW_pos", "SW_neu", "SW_neg",
        "SE_pos", "SE_neu", "SE_neg",
        "DI",
    };
    return names;
}

namespace {

Polarity polarity_from_name(const std::string& name, const std::filesystem::path& file) {
    if (name == "pos") return Polarity::kPositive;
    if (name == "int" || name == "neu") return Polarity::kNeutral;
    if (name == "neg") return Polarity::kNegative;
    throw ConfigError("unknown polarity '" + name + "' in " + file.string());
}

std::vector<std::vector<std::string>> load_phrases(const std::filesystem::path& path) {
    std::vector<std::vector<std::string>> out;
    for (const auto& term : text::load_term_list(path)) {
        auto toks = text::tokenize(text::ascii_lower(term));
        if (!toks.empty()) out.push_back(std::move(toks));
    }
    return out;
}

bool contains_phrase(const std::vector<std::string>& toks, const std::vector<std::vector<std::string>>& phrases) {
    for (const auto& ph : phrases) {
        if (ph.size() > toks.size()) continue;
        for (std::size_t i = 0; i + ph.size() <= toks.size(); ++i)
            if (std::equal(ph.begin(), ph.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    }
    return false;
}

bool is_term(const std::string& tok) { return !tok.empty() && !text::is_punctuation(tok); }

}  // namespace

Lexicons Lexicons::from_files(const std::filesystem::path& greetings, const std::filesystem::path& disapproval,
                              const std::filesystem::path& sentiment_words,
                              const std::filesystem::path& sentiment_emoji) {
    Lexicons lex;
    lex.greetings = load_phrases(greetings);
    lex.disapproval = load_phrases(disapproval);
    for (const auto& [k, v] : text::load_tsv_map(sentiment_words))
        lex.sentiment_words[text::ascii_lower(k)] = polarity_from_name(v, sentiment_words);
    for (const auto& [k, v] : text::load_tsv_map(sentiment_emoji))
        lex.sentiment_emoji[k] = polarity_from_name(v, sentiment_emoji);
    return lex;
}

Lexicons Lexicons::from_resources(const std::filesystem::path& dir) {
    const auto lx = dir / "lexicons";
    return from_files(lx / "greetings.txt", lx / "disapproval.txt", lx / "sentiment_words.tsv",
                      lx / "sentiment_emoji.tsv");
}

// ---------------------------------------------------------------------------

TfIdfIndex::TfIdfIndex(const corpus::ChatLog& chat) : documents_(chat.size()) {
    std::vector<const std::vector<std::string>*> docs;
    for (const auto& u : chat.utterances) {
        std::set<std::string> seen;
        for (const auto& tok : u.tokens)
            if (is_term(tok)) seen.insert(tok);
        for (const auto& term : seen) ++df_[term];
        docs.push_back(&u.tokens);
    }
    chat_ = scope_weights(docs);
}

double TfIdfIndex::idf(const std::string& term) const {
    auto it = df_.find(term);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + df)) + 1.0;
}

TfIdfIndex::Weights TfIdfIndex::scope_weights(const std::vector<const std::vector<std::string>*>& docs) const {
    std::map<std::string, std::size_t> tf;
    std::size_t len = 0;
    for (const auto* d : docs)
        for (const auto& tok : *d)
            if (is_term(tok)) {
                ++tf[tok];
                ++len;
            }
    Weights w;
    for (const auto& [term, c] : tf) w[term] = static_cast<double>(c) / static_cast<double>(len) * idf(term);
    return w;
}

std::vector<std::string> top_terms(const TfIdfIndex::Weights& w, std::size_t n) {
    std::vector<std::pair<std::string, double>> items(w.begin(), w.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (items.size() > n) items.resize(n);
    std::vector<std::string> out;
    for (auto& [term, _] : items) out.push_back(term);
    return out;
}

double topic_distance(const TfIdfIndex::Weights& a, const TfIdfIndex::Weights& b) {
    std::set<std::string> terms;
    for (auto& t : top_terms(a)) terms.insert(t);
    for (auto& t : top_terms(b)) terms.insert(t);
    auto weight = [](const TfIdfIndex::Weights& w, const std::string& t) {
        auto it = w.find(t);
        return it == w.end() ? 0.0 : it->second;
    };
    double sq = 0.0;
    for (const auto& t : terms) {
        const double diff = weight(a, t) - weight(b, t);
        sq += diff * diff;
    }
    return std::sqrt(sq);
}

TopicDeviation topic_deviation(const TfIdfIndex& index, const Utterance& head, const Utterance& u) {
    const auto head_w = index.scope_weights({&head.tokens});
    const auto u_w = index.scope_weights({&u.tokens});
    return {topic_distance(index.chat_weights(), head_w), topic_distance(head_w, u_w)};
}

std::array<double, kHeuristicDim> heuristic_attributes(const Utterance& u, const DialogContext& ctx,
                                                       const Lexicons& lex) {
    CHATMINE_REQUIRE(ctx.dialog != nullptr && ctx.tfidf != nullptr, "heuristics need a dialog and a TF-IDF index");
    const auto& d = *ctx.dialog;
    CHATMINE_REQUIRE(ctx.position >= 1 && ctx.position <= d.members.size(), "utterance position outside its dialog");
    std::array<double, kHeuristicDim> h{};

    const auto words = text::tokenize(text::ascii_lower(u.clean_text));
    auto has_word = [&](std::string_view w) { return std::find(words.begin(), words.end(), w) != words.end(); };
    h[kWhat] = has_word("what");
    h[kWhy] = has_word("why");
    h[kWhen] = has_word("when");
    h[kWhere] = has_word("where");
    h[kWho] = has_word("who");
    h[kHow] = has_word("how");
    h[kQuestionMark] = has_word("?");
    h[kExclamationMark] = has_word("!");
    h[kGreeting] = contains_phrase(words, lex.greetings);
    h[kDisapproval] = contains_phrase(words, lex.disapproval);
    h[kMentionSimi] = std::any_of(words.begin(), words.end(), [](const std::string& w) { return w.rfind("simi", 0) == 0; });
    h[kMentionSame] = has_word("same");

    h[kNT] = static_cast<double>(u.tokens.size());
    h[kNUT] = static_cast<double>(std::set<std::string>(u.tokens.begin(), u.tokens.end()).size());
    std::set<std::string> stems;
    for (const auto& tok : u.tokens) stems.insert(text::porter_stem(tok));
    h[kNST] = static_cast<double>(stems.size());

    h[kAP] = static_cast<double>(ctx.position);
    h[kRP] = static_cast<double>(ctx.position) / static_cast<double>(d.members.size());

    const auto td = topic_deviation(*ctx.tfidf, d.head, u);
    h[kTDH] = td.tdh;
    h[kTDU] = td.tdu;

    std::array<double, 3> sw{}, se{};
    for (const auto& tok : u.tokens) {
        if (auto it = lex.sentiment_emoji.find(tok); it != lex.sentiment_emoji.end()) {
            se[static_cast<std::size_t>(it->second)] += 1.0;
        } else if (auto wt = lex.sentiment_words.find(tok); wt != lex.sentiment_words.end()) {
            sw[static_cast<std::size_t>(wt->second)] += 1.0;
        }
    }
    const double total = sw[0] + sw[1] + sw[2] + se[0] + se[1] + se[2];
    for (std::size_t c = 0; c < 3; ++c) {
        h[kSSPos + c] = total > 0.0 ? (sw[c] + se[c]) / total : 0.0;
        h[kSWPos + c] = sw[c];
        h[kSEPos + c] = se[c];
    }
    h[kDI] = u.author_id == d.initiator_id;
    return h;
}

// ---------------------------------------------------------------------------

Standardizer Standardizer::identity() {
    Standardizer s;
    s.mean.fill(0.0);
    s.stddev.fill(1.0);
    return s;
}

Standardizer Standardizer::fit(const std::vector<std::array<double, kHeuristicDim>>& rows) {
    Standardizer s = identity();
    if (rows.empty()) return s;
    const double n = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < kHeuristicDim; ++j) {
        double m = 0.0;
        for (const auto& r : rows) m += r[j];
        m /= n;
        double var = 0.0;
        for (const auto& r : rows) var += (r[j] - m) * (r[j] - m);
        var /= n;
        s.mean[j] = m;
        s.stddev[j] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return s;
}

std::array<double, kHeuristicDim> Standardizer::apply(const std::array<double, kHeuristicDim>& h) const {
    std::array<double, kHeuristicDim> out{};
    for (std::size_t j = 0; j < kHeuristicDim; ++j) out[j] = (h[j] - mean[j]) / stddev[j];
    return out;
}

nlohmann::json Standardizer::to_json() const { return {{"mean", mean}, {"stddev", stddev}}; }

Standardizer Standardizer::from_json(const nlohmann::json& j) {
    Standardizer s;
    const auto m = j.at("mean").get<std::vector<double>>();
    const auto sd = j.at("stddev").get<std::vector<double>>();
    if (m.size() != kHeuristicDim || sd.size() != kHeuristicDim)
        throw ConfigError("standardization statistics must have 29 entries");
    std::copy(m.begin(), m.end(), s.mean.begin());
    std::copy(sd.begin(), sd.end(), s.stddev.begin());
    for (double v : s.stddev)
        if (!(v > 0.0)) throw ConfigError("standardization stddev must be positive");
    return s;
}

std::vector<double> fuse_features(const std::vector<double>& textual, const std::array<double, kHeuristicDim>& heur,
                                  const std::vector<double>& context) {
    CHATMINE_REQUIRE(textual.size() == kTextualDim, "textual feature must be 256-dim");
    CHATMINE_REQUIRE(context.size() == kContextDim, "context feature must be 128-dim");
    std::vector<double> out;
    out.reserve(kFusedDim);
    out.insert(out.end(), textual.begin(), textual.end());
    out.insert(out.end(), heur.begin(), heur.end());
    out.insert(out.end(), context.begin(), context.end());
    return out;
}

}  // namespace chatmine::embed
