/*
 * Copyright 2026 The unlink-eval Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef UNLINK_SYNTHBTP_HPP
#define UNLINK_SYNTHBTP_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unlink/error.hpp"

namespace unlinkeval {

/// Fixed-length bit sequence packed into 64-bit words, bit i at word i/64,
/// position i%64. Padding bits past size() are always zero.
class BitTemplate {
 public:
  BitTemplate() = default;
  explicit BitTemplate(std::size_t bits);

  /// "1010" -> bit 0 = 1, bit 1 = 0, ...
  static BitTemplate from_string(std::string_view bits);
  std::string to_string() const;

  std::size_t size() const noexcept { return bits_; }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i, bool value = true);
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  std::size_t popcount() const;
  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }

  BitTemplate& operator^=(const BitTemplate& other);
  friend BitTemplate operator^(BitTemplate a, const BitTemplate& b) { return a ^= b; }
  friend bool operator==(const BitTemplate&, const BitTemplate&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

std::size_t hamming_distance(const BitTemplate& a, const BitTemplate& b);

/// Hamming distance divided by the template length.
double normalized_hamming_distance(const BitTemplate& a, const BitTemplate& b);

// --- deterministic randomness ------------------------------------------------

/// SplitMix64 step; used to derive independent stream seeds from one master
/// seed.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for the stream identified by (master, stream, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index);

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(Rng& rng);

/// Unbiased integer in [0, n).
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

BitTemplate random_template(std::size_t bits, Rng& rng);

// --- corpus ---------------------------------------------------------------

struct CorpusConfig {
  std::size_t n_subjects = 100;
  std::size_t samples_per_subject = 4;
  std::size_t template_bits = 4096;
  double intra_flip_rate = 0.1;
  /// Probability that a sample is a failed acquisition, replaced by bits
  /// independent of the subject's latent template.
  double outlier_rate = 0.0;
  std::uint64_t seed = 1;
};

void validate(const CorpusConfig& cfg);

/// Raw (unprotected) samples indexed [subject][sample].
struct Corpus {
  CorpusConfig config;
  std::vector<std::vector<BitTemplate>> samples;

  const BitTemplate& sample(std::size_t subject, std::size_t index) const {
    return samples[subject][index];
  }
};

/// One latent random template per subject; every sample flips each latent bit
/// independently with probability intra_flip_rate. Subject s draws from its
/// own stream derive_seed(seed, 0, s), so corpora are reproducible bit-exactly.
Corpus generate_corpus(const CorpusConfig& cfg);

// --- protection schemes ------------------------------------------------------

enum class Scheme { XorSalt, BloomFilter, BlockRemap, None };

const char* to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

struct ProtectedTemplate {
  BitTemplate bits;
  int key_id = 0;
  Scheme scheme = Scheme::None;
};

/// Block-level permutation: output block i is input block perm[i].
using BlockPermutation = std::vector<std::size_t>;

/// Parameters of every scheme; only the fields of the selected scheme matter.
struct SchemeConfig {
  Scheme scheme = Scheme::XorSalt;
  std::size_t remap_block_bits = 16;
  /// 0: every key is an independent random block permutation. n > 0: all
  /// keys share one master permutation and differ from it by n random
  /// transpositions, so cross-key templates stay largely aligned.
  std::size_t remap_leak_swaps = 0;
  std::size_t bloom_block_width = 32;
  std::size_t bloom_block_height = 8;
};

/// Per-key secret material. Only the member for the ring's scheme is filled.
struct ProtectionKey {
  BitTemplate xor_mask;
  BlockPermutation permutation;
  std::vector<std::uint32_t> column_keys;
};

/// K pairwise-distinct keys for one scheme.
class KeyRing {
 public:
  static KeyRing generate(const SchemeConfig& scheme, std::size_t template_bits,
                          std::size_t keys, std::uint64_t seed);

  std::size_t size() const noexcept { return keys_.size(); }
  const ProtectionKey& key(std::size_t k) const { return keys_.at(k); }
  const SchemeConfig& scheme() const noexcept { return scheme_; }
  std::size_t template_bits() const noexcept { return template_bits_; }

  /// Bit permutation r with r(T2)[i] = T2[r[i]] carrying a template protected
  /// under key `to` into the layout of key `from`. Identity for schemes that
  /// do not move bits.
  std::vector<std::size_t> relation(std::size_t from, std::size_t to) const;

 private:
  SchemeConfig scheme_;
  std::size_t template_bits_ = 0;
  std::vector<ProtectionKey> keys_;
};

ProtectedTemplate xor_salt(const BitTemplate& raw, const BitTemplate& key,
                           int key_id = 0);

ProtectedTemplate block_remap(const BitTemplate& raw,
                              std::span<const std::size_t> permutation,
                              std::size_t block_bits, int key_id = 0);

/// Bloom-filter encoding. The raw template is read as `block_height` rows of
/// C = size/block_height columns (bit (r, c) at index r*C + c) and split into
/// blocks of `block_width` adjacent columns. Each column, XORed with its
/// column key, is read as an integer with row 0 as the most significant bit;
/// the bit with that index is set in the block's 2^h-bit filter. Filters are
/// concatenated in block order.
ProtectedTemplate bloom_protect(const BitTemplate& raw,
                                std::span<const std::uint32_t> column_keys,
                                std::size_t block_width, std::size_t block_height,
                                int key_id = 0);

ProtectedTemplate protect(const BitTemplate& raw, const KeyRing& keys,
                          std::size_t key_id);

/// Undoes the protection under known keys. BloomFilter inversion is lossy
/// and only attempted when `approximate_bloom` is set; otherwise it throws
/// SchemeNotInvertible.
BitTemplate reconstruct(const ProtectedTemplate& t, const KeyRing& keys,
                        bool approximate_bloom = false);

/// Templates of every corpus sample protected under a single key.
struct ProtectedDatabase {
  int key_id = 0;
  Scheme scheme = Scheme::None;
  std::vector<std::vector<ProtectedTemplate>> templates;  // [subject][sample]

  std::size_t subjects() const noexcept { return templates.size(); }
  std::size_t samples() const noexcept {
    return templates.empty() ? 0 : templates.front().size();
  }
};

ProtectedDatabase protect_corpus(const Corpus& corpus, const KeyRing& keys,
                                 std::size_t key_id);

// --- linkage functions -------------------------------------------------------

/// The scheme's own comparator: normalized Hamming distance, or
/// |T1 xor T2| / (|T1| + |T2|) for Bloom filters.
double linkage_pic_hd(const ProtectedTemplate& a, const ProtectedTemplate& b);

/// |HW(T1) - HW(T2)| / length.
double linkage_hamming_weight(const ProtectedTemplate& a,
                              const ProtectedTemplate& b);

/// Normalized HD(T1, r(T2)) with r a bit permutation, r(T2)[i] = T2[r[i]].
double linkage_permuted_xor(const ProtectedTemplate& a, const ProtectedTemplate& b,
                            std::span<const std::size_t> relation);

/// Normalized HD between the two reconstructions.
double linkage_reconstruction(const ProtectedTemplate& a,
                              const ProtectedTemplate& b, const KeyRing& keys,
                              bool approximate_bloom = false);

// --- binary container ----------------------------------------------------------

/// Packed-bit database file: "ULBT" magic, u32 version, u32 scheme,
/// i32 key id, u32 subjects, u32 samples, u64 bits per template, then every
/// template's words as little-endian u64 in [subject][sample] order.
inline constexpr std::uint32_t kContainerVersion = 1;

void write_database(const std::filesystem::path& path, const ProtectedDatabase& db);
ProtectedDatabase read_database(const std::filesystem::path& path);

/// Raw corpus in the same container, scheme None and key id -1.
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

}  // namespace unlinkeval

#endif  // UNLINK_SYNTHBTP_HPP
