#include "chatmine/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "chatmine/error.hpp"

namespace chatmine::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    // Inline comments only outside quotes.
    if (auto hash = v.find('#'); hash != std::string::npos) v = trim(v.substr(0, hash));
    return v;
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::string s = v;
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '[' || c == ']' || c == ' '; }), s.end());
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const auto n = std::stoull(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(n));
        } catch (const std::exception&) {
            throw ConfigError("setting " + key + " expects a list of integers, got '" + v + "'");
        }
    }
    return out;
}

}  // namespace

const std::vector<std::string>& Settings::known_keys() {
    static const std::vector<std::string> keys = {
        "resources",
        "seed",
        "jobs",
        "preprocess.stopwords",
        "preprocess.acronyms",
        "preprocess.emoji",
        "preprocess.placeholder_rules",
        "preprocess.lemma_rules",
        "preprocess.perplexity_threshold",
        "preprocess.merge_time_gap_max",
        "preprocess.typo_correction",
        "model.batch_size",
        "model.dropout",
        "model.lr",
        "model.beta1",
        "model.beta2",
        "model.epsilon",
        "model.max_epochs",
        "model.early_stop_patience",
        "model.issue_threshold",
        "model.solution_threshold",
        "model.validation_fraction",
        "model.balance",
        "model.conv_kernels",
        "model.kernel_size",
        "model.attention_dim",
        "model.hidden",
        "encoder.provider",
        "encoder.dim",
        "encoder.table",
        "encoder.seed",
        "encoder.window_radius",
        "link.checkpoint",
        "link.threshold",
        "link.lookback",
        "link.hidden",
        "link.epochs",
        "link.negatives",
        "link.rounds",
    };
    return keys;
}

void Settings::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    parse(in, path.string());
}

void Settings::parse(std::istream& in, const std::string& source) {
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where + "empty key");
        try {
            set(section.empty() ? key : section + "." + key, unquote(trim(line.substr(eq + 1))));
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
}

void Settings::set(const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown setting: " + key);
    values_[key] = value;
}

std::optional<std::string> Settings::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

double Settings::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("setting " + key + " expects a number, got '" + *v + "'");
    }
}

std::uint64_t Settings::get_uint(const std::string& key, std::uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument(*v);
        const auto n = std::stoull(*v, &used, 0);
        if (used != v->size()) throw std::invalid_argument(*v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("setting " + key + " expects a nonnegative integer, got '" + *v + "'");
    }
}

bool Settings::get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("setting " + key + " expects true or false, got '" + *v + "'");
}

std::filesystem::path Settings::get_path(const std::string& key, const std::filesystem::path& fallback) const {
    auto v = get(key);
    return v ? std::filesystem::path(*v) : fallback;
}

std::filesystem::path Settings::resource_dir() const {
    if (auto v = get("resources")) return *v;
    if (const char* env = std::getenv("CHATMINE_RESOURCES"); env && *env) return env;
    return CHATMINE_RESOURCE_DIR;
}

corpus::PreprocessConfig Settings::preprocess() const {
    auto c = corpus::PreprocessConfig::with_resources(resource_dir());
    c.stopwords = get_path("preprocess.stopwords", c.stopwords);
    c.acronyms = get_path("preprocess.acronyms", c.acronyms);
    c.emoji = get_path("preprocess.emoji", c.emoji);
    c.placeholder_rules = get_path("preprocess.placeholder_rules", c.placeholder_rules);
    c.lemma_rules = get_path("preprocess.lemma_rules", c.lemma_rules);
    c.perplexity_threshold = get_double("preprocess.perplexity_threshold", c.perplexity_threshold);
    c.merge_time_gap_max = get_double("preprocess.merge_time_gap_max", c.merge_time_gap_max);
    c.typo_correction = get_bool("preprocess.typo_correction", c.typo_correction);
    c.validate();
    return c;
}

pair::ModelConfig Settings::model() const {
    pair::ModelConfig c;
    c.batch_size = get_uint("model.batch_size", c.batch_size);
    c.dropout = get_double("model.dropout", c.dropout);
    c.adam.lr = get_double("model.lr", c.adam.lr);
    c.adam.beta1 = get_double("model.beta1", c.adam.beta1);
    c.adam.beta2 = get_double("model.beta2", c.adam.beta2);
    c.adam.epsilon = get_double("model.epsilon", c.adam.epsilon);
    c.max_epochs = get_uint("model.max_epochs", c.max_epochs);
    c.patience = get_uint("model.early_stop_patience", c.patience);
    c.issue_threshold = get_double("model.issue_threshold", c.issue_threshold);
    c.solution_threshold = get_double("model.solution_threshold", c.solution_threshold);
    c.validation_fraction = get_double("model.validation_fraction", c.validation_fraction);
    c.balance = get_bool("model.balance", c.balance);
    c.seed = seed();
    if (auto v = get("model.conv_kernels")) c.conv.kernels = parse_list("model.conv_kernels", *v);
    c.conv.kernel_size = get_uint("model.kernel_size", c.conv.kernel_size);
    c.attention_dim = get_uint("model.attention_dim", c.attention_dim);
    c.hidden = get_uint("model.hidden", c.hidden);
    c.validate();
    return c;
}

encoder::EncoderConfig Settings::encoder() const {
    encoder::EncoderConfig c;
    if (auto v = get("encoder.provider")) c.provider = encoder::provider_from_name(*v);
    c.dim = get_uint("encoder.dim", c.dim);
    c.table_path = get_path("encoder.table", c.table_path);
    c.seed = get_uint("encoder.seed", c.seed);
    c.window_radius = get_uint("encoder.window_radius", c.window_radius);
    c.validate();
    return c;
}

disentangle::LinkConfig Settings::link() const {
    disentangle::LinkConfig c;
    c.threshold = get_double("link.threshold", c.threshold);
    c.lookback = get_uint("link.lookback", c.lookback);
    c.hidden = get_uint("link.hidden", c.hidden);
    c.validate();
    return c;
}

disentangle::LinkTrainConfig Settings::link_training() const {
    disentangle::LinkTrainConfig c;
    c.epochs = get_uint("link.epochs", c.epochs);
    c.negatives_per_child = get_uint("link.negatives", c.negatives_per_child);
    c.seed = seed();
    return c;
}

std::filesystem::path Settings::link_checkpoint() const {
    return get_path("link.checkpoint", resource_dir() / "models" / "link.ckpt");
}

std::size_t Settings::link_rounds() const { return get_uint("link.rounds", 20); }

bool Settings::has_encoder_settings() const {
    for (const auto& [k, v] : values_)
        if (k.rfind("encoder.", 0) == 0) return true;
    return false;
}

std::uint64_t Settings::seed() const { return get_uint("seed", 1); }

std::size_t Settings::jobs() const {
    const auto j = get_uint("jobs", 1);
    if (j < 1) throw ConfigError("jobs must be >= 1");
    return j;
}

}  // namespace chatmine::config
