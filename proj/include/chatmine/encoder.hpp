#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "chatmine/corpus.hpp"

namespace chatmine::encoder {

enum class Provider { kHash, kTable };

std::string provider_name(Provider p);
Provider provider_from_name(const std::string& name);

struct EncoderConfig {
    std::size_t dim = 800;
    Provider provider = Provider::kHash;
    std::filesystem::path table_path;
    std::size_t window_radius = 1;
    std::uint64_t seed = 0x5eed;

    void validate() const;
};

struct UtteranceEncoding {
    std::vector<double> vector;
    std::string source;

    bool is_zero() const;
};

/// Rows keyed by token, loaded from a "vocab dim" header followed by
/// "token f1 .. fdim" lines.
class EmbeddingTable {
 public:
    static constexpr const char* kUnknownToken = "<unk>";

    static EmbeddingTable load(const std::filesystem::path& path, std::size_t expected_dim);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return rows_.size(); }
    std::size_t duplicate_warnings() const { return duplicates_; }
    /// FNV-1a over the file bytes; part of the encoder fingerprint.
    std::uint64_t content_hash() const { return content_hash_; }

    /// Row for the token, or the unknown row.
    std::span<const double> lookup(const std::string& token) const;
    bool contains(const std::string& token) const { return rows_.count(token) > 0; }

 private:
    std::size_t dim_ = 0;
    std::size_t duplicates_ = 0;
    std::uint64_t content_hash_ = 0;
    std::unordered_map<std::string, std::vector<double>> rows_;
    std::vector<double> unknown_;
};

/// Utterance encoder behind a provider switch.
///
/// hash: every token adds a signed +-1 into 3 seeded buckets of d; the sum is
/// L2-normalized. table: mean of token rows (unknown tokens use the `<unk>`
/// row, or the table mean when the file has none), L2-normalized.
/// An utterance without tokens encodes to the zero vector.
class Encoder {
 public:
    explicit Encoder(EncoderConfig cfg);

    const EncoderConfig& config() const { return cfg_; }
    std::size_t dim() const { return cfg_.dim; }

    UtteranceEncoding encode(const corpus::Utterance& u) const;
    UtteranceEncoding encode_tokens(const std::vector<std::string>& tokens) const;

    /// Stable identifier of everything that changes the vectors.
    std::string fingerprint() const;

 private:
    EncoderConfig cfg_;
    std::shared_ptr<const EmbeddingTable> table_;
};

struct LocalWindow {
    std::size_t center = 0;
    std::vector<std::vector<double>> vectors;  // 2k + 1 slots, u_{i-k} .. u_{i+k}
    std::vector<bool> pad_mask;

    std::size_t radius() const { return vectors.size() / 2; }
};

/// Out-of-range slots become zero vectors with pad_mask set.
LocalWindow build_local_window(std::span<const UtteranceEncoding> encodings, std::size_t i, std::size_t k);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace chatmine::encoder
