#include "chatmine/encoder.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "chatmine/error.hpp"

namespace chatmine::encoder {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void l2_normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    if (n <= 0.0) return;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
}

constexpr std::size_t kHashBuckets = 3;

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string provider_name(Provider p) { return p == Provider::kHash ? "hash" : "table"; }

Provider provider_from_name(const std::string& name) {
    if (name == "hash") return Provider::kHash;
    if (name == "table") return Provider::kTable;
    throw ConfigError("unknown encoder provider: " + name);
}

void EncoderConfig::validate() const {
    if (dim < 1) throw ConfigError("encoder dim must be >= 1");
    if (provider == Provider::kTable && table_path.empty()) throw ConfigError("table provider needs a table path");
}

bool UtteranceEncoding::is_zero() const {
    for (double x : vector)
        if (x != 0.0) return false;
    return true;
}

// ---------------------------------------------------------------------------

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, std::size_t expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("embedding table not found: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string content = ss.str();

    EmbeddingTable table;
    table.content_hash_ = fnv1a64(content);
    std::istringstream lines(content);
    std::string line;
    if (!std::getline(lines, line)) throw ConfigError("embedding table is empty: " + path.string());
    std::size_t vocab = 0;
    {
        std::istringstream header(line);
        if (!(header >> vocab >> table.dim_)) throw ConfigError("bad embedding table header: " + path.string());
    }
    if (table.dim_ != expected_dim)
        throw ConfigError("embedding table dim " + std::to_string(table.dim_) + " does not match encoder dim " +
                          std::to_string(expected_dim));
    std::size_t line_no = 1;
    while (std::getline(lines, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string token;
        row >> token;
        std::vector<double> values;
        values.reserve(table.dim_);
        double x;
        while (row >> x) values.push_back(x);
        if (values.size() != table.dim_)
            throw ConfigError("embedding row " + std::to_string(line_no) + " has " + std::to_string(values.size()) +
                              " values, expected " + std::to_string(table.dim_));
        if (table.rows_.count(token)) {
            ++table.duplicates_;
            std::cerr << "warning: duplicate embedding row for '" << token << "' (last wins)\n";
        }
        table.rows_[token] = std::move(values);
    }
    if (table.rows_.size() + table.duplicates_ != vocab)
        std::cerr << "warning: embedding table header declares " << vocab << " rows, found "
                  << table.rows_.size() + table.duplicates_ << '\n';

    if (auto it = table.rows_.find(kUnknownToken); it != table.rows_.end()) {
        table.unknown_ = it->second;
    } else {
        table.unknown_.assign(table.dim_, 0.0);
        // Iterate in sorted order so the mean is bit-stable across hash-map layouts.
        std::map<std::string, const std::vector<double>*> sorted;
        for (const auto& [k, v] : table.rows_) sorted.emplace(k, &v);
        for (const auto& [k, v] : sorted)
            for (std::size_t j = 0; j < table.dim_; ++j) table.unknown_[j] += (*v)[j];
        if (!sorted.empty())
            for (double& u : table.unknown_) u /= static_cast<double>(sorted.size());
    }
    return table;
}

std::span<const double> EmbeddingTable::lookup(const std::string& token) const {
    if (auto it = rows_.find(token); it != rows_.end()) return it->second;
    return unknown_;
}

// ---------------------------------------------------------------------------

Encoder::Encoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.provider == Provider::kTable)
        table_ = std::make_shared<const EmbeddingTable>(EmbeddingTable::load(cfg_.table_path, cfg_.dim));
}

UtteranceEncoding Encoder::encode(const corpus::Utterance& u) const { return encode_tokens(u.tokens); }

UtteranceEncoding Encoder::encode_tokens(const std::vector<std::string>& tokens) const {
    UtteranceEncoding out;
    out.source = provider_name(cfg_.provider);
    out.vector.assign(cfg_.dim, 0.0);
    if (tokens.empty()) return out;
    if (cfg_.provider == Provider::kHash) {
        for (const auto& tok : tokens) {
            const std::uint64_t base = fnv1a64(tok) ^ splitmix64(cfg_.seed);
            for (std::size_t j = 0; j < kHashBuckets; ++j) {
                const std::uint64_t h = splitmix64(base + 0x632be59bd9b4e019ULL * (j + 1));
                const std::size_t bucket = static_cast<std::size_t>(h % cfg_.dim);
                out.vector[bucket] += (h >> 63) ? -1.0 : 1.0;
            }
        }
    } else {
        for (const auto& tok : tokens) {
            auto row = table_->lookup(tok);
            for (std::size_t j = 0; j < cfg_.dim; ++j) out.vector[j] += row[j];
        }
        for (double& x : out.vector) x /= static_cast<double>(tokens.size());
    }
    l2_normalize(out.vector);
    return out;
}

std::string Encoder::fingerprint() const {
    std::ostringstream os;
    os << "provider=" << provider_name(cfg_.provider) << ";dim=" << cfg_.dim << ";seed=" << cfg_.seed;
    if (table_) os << ";table=" << std::hex << std::setw(16) << std::setfill('0') << table_->content_hash();
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(os.str());
    return hex.str();
}

LocalWindow build_local_window(std::span<const UtteranceEncoding> encodings, std::size_t i, std::size_t k) {
    CHATMINE_REQUIRE(i < encodings.size(), "local window center out of range");
    const std::size_t d = encodings[i].vector.size();
    LocalWindow w;
    w.center = i;
    for (std::size_t s = 0; s < 2 * k + 1; ++s) {
        // Slot s covers position i - k + s.
        const bool in_range = i + s >= k && i + s - k < encodings.size();
        if (in_range) {
            w.vectors.push_back(encodings[i + s - k].vector);
            w.pad_mask.push_back(false);
        } else {
            w.vectors.emplace_back(d, 0.0);
            w.pad_mask.push_back(true);
        }
    }
    return w;
}

}  // namespace chatmine::encoder
