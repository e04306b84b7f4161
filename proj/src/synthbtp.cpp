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

#include "unlink/synthbtp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

namespace unlinkeval {

// --- BitTemplate ---------------------------------------------------------------

BitTemplate::BitTemplate(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

BitTemplate BitTemplate::from_string(std::string_view bits) {
  BitTemplate t(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      t.set(i);
    } else if (bits[i] != '0') {
      throw Error(ErrorCode::ParseError, "bit string may only contain 0 and 1");
    }
  }
  return t;
}

std::string BitTemplate::to_string() const {
  std::string out(bits_, '0');
  for (std::size_t i = 0; i < bits_; ++i) {
    if (test(i)) out[i] = '1';
  }
  return out;
}

void BitTemplate::set(std::size_t i, bool value) {
  const auto mask = std::uint64_t{1} << (i & 63);
  if (value) {
    words_[i >> 6] |= mask;
  } else {
    words_[i >> 6] &= ~mask;
  }
}

std::size_t BitTemplate::popcount() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

BitTemplate& BitTemplate::operator^=(const BitTemplate& other) {
  if (other.bits_ != bits_) {
    throw Error(ErrorCode::LengthMismatch, "templates differ in length");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
  return *this;
}

std::size_t hamming_distance(const BitTemplate& a, const BitTemplate& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "templates differ in length");
  }
  std::size_t d = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    d += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  }
  return d;
}

double normalized_hamming_distance(const BitTemplate& a, const BitTemplate& b) {
  if (a.size() == 0) return 0.0;
  return static_cast<double>(hamming_distance(a, b)) / static_cast<double>(a.size());
}

// --- randomness ----------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index) {
  std::uint64_t state = master;
  std::uint64_t h = splitmix64(state);
  state = h ^ (stream * 0xd1b54a32d192ed03ULL);
  h = splitmix64(state);
  state = h ^ index;
  return splitmix64(state);
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

BitTemplate random_template(std::size_t bits, Rng& rng) {
  BitTemplate t(bits);
  auto words = t.words();
  for (auto& w : words) w = rng();
  if (bits % 64 != 0 && !words.empty()) {
    words.back() &= (std::uint64_t{1} << (bits % 64)) - 1;
  }
  return t;
}

// --- corpus ----------------------------------------------------------------------

void validate(const CorpusConfig& cfg) {
  if (cfg.n_subjects < 2) {
    throw Error(ErrorCode::InvalidConfig, "corpus needs at least 2 subjects");
  }
  if (cfg.samples_per_subject < 2) {
    throw Error(ErrorCode::InvalidConfig, "corpus needs at least 2 samples per subject");
  }
  if (cfg.template_bits == 0) {
    throw Error(ErrorCode::InvalidConfig, "template length must be positive");
  }
  if (!(cfg.intra_flip_rate >= 0.0 && cfg.intra_flip_rate < 0.5)) {
    throw Error(ErrorCode::InvalidConfig, "intra_flip_rate must lie in [0, 0.5)");
  }
  if (!(cfg.outlier_rate >= 0.0 && cfg.outlier_rate <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "outlier_rate must lie in [0, 1]");
  }
}

Corpus generate_corpus(const CorpusConfig& cfg) {
  validate(cfg);
  Corpus corpus{cfg, {}};
  corpus.samples.resize(cfg.n_subjects);
  for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
    Rng rng(derive_seed(cfg.seed, 0, s));
    const BitTemplate latent = random_template(cfg.template_bits, rng);
    auto& samples = corpus.samples[s];
    samples.reserve(cfg.samples_per_subject);
    for (std::size_t i = 0; i < cfg.samples_per_subject; ++i) {
      if (uniform01(rng) < cfg.outlier_rate) {
        samples.push_back(random_template(cfg.template_bits, rng));
        continue;
      }
      BitTemplate sample = latent;
      if (cfg.intra_flip_rate > 0.0) {
        for (std::size_t b = 0; b < cfg.template_bits; ++b) {
          if (uniform01(rng) < cfg.intra_flip_rate) sample.flip(b);
        }
      }
      samples.push_back(std::move(sample));
    }
  }
  return corpus;
}

// --- schemes -------------------------------------------------------------------

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::XorSalt: return "xor";
    case Scheme::BloomFilter: return "bloom";
    case Scheme::BlockRemap: return "remap";
    case Scheme::None: return "none";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::XorSalt, Scheme::BloomFilter, Scheme::BlockRemap, Scheme::None}) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown scheme '" + std::string(name) +
                                            "' (expected xor, bloom, remap or none)");
}

namespace {

void check_bijection(std::span<const std::size_t> perm, std::size_t blocks) {
  if (perm.size() != blocks) {
    throw Error(ErrorCode::NotBijective,
                "permutation has " + std::to_string(perm.size()) + " entries for " +
                    std::to_string(blocks) + " blocks");
  }
  std::vector<bool> seen(blocks, false);
  for (auto p : perm) {
    if (p >= blocks || seen[p]) {
      throw Error(ErrorCode::NotBijective, "block permutation is not a bijection");
    }
    seen[p] = true;
  }
}

struct BloomShape {
  std::size_t columns;
  std::size_t blocks;
  std::size_t filter_bits;
};

BloomShape bloom_shape(std::size_t bits, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0 || height > 20) {
    throw Error(ErrorCode::ShapeMismatch, "bloom block size out of range");
  }
  if (bits % height != 0 || (bits / height) % width != 0) {
    throw Error(ErrorCode::ShapeMismatch,
                std::to_string(bits) + " bits do not reshape into " +
                    std::to_string(height) + " rows of " + std::to_string(width) +
                    "-column blocks");
  }
  const std::size_t columns = bits / height;
  return {columns, columns / width, std::size_t{1} << height};
}

std::size_t remap_blocks(std::size_t bits, std::size_t block_bits) {
  if (block_bits == 0 || bits % block_bits != 0) {
    throw Error(ErrorCode::NotDivisible,
                std::to_string(bits) + " bits are not divisible into blocks of " +
                    std::to_string(block_bits));
  }
  return bits / block_bits;
}

BlockPermutation random_permutation(std::size_t n, Rng& rng) {
  BlockPermutation p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(p[i - 1], p[uniform_below(rng, i)]);
  }
  return p;
}

std::size_t protected_bits(const SchemeConfig& s, std::size_t bits) {
  if (s.scheme == Scheme::BloomFilter) {
    const auto shape = bloom_shape(bits, s.bloom_block_width, s.bloom_block_height);
    return shape.blocks * shape.filter_bits;
  }
  return bits;
}

bool same_key(const ProtectionKey& a, const ProtectionKey& b) {
  return a.xor_mask == b.xor_mask && a.permutation == b.permutation &&
         a.column_keys == b.column_keys;
}

}  // namespace

KeyRing KeyRing::generate(const SchemeConfig& scheme, std::size_t template_bits,
                          std::size_t keys, std::uint64_t seed) {
  if (keys == 0) throw Error(ErrorCode::InvalidConfig, "key ring needs at least one key");
  KeyRing ring;
  ring.scheme_ = scheme;
  ring.template_bits_ = template_bits;
  Rng rng(derive_seed(seed, 1, 0));

  BlockPermutation master;
  std::size_t blocks = 0;
  BloomShape shape{};
  if (scheme.scheme == Scheme::BlockRemap) {
    blocks = remap_blocks(template_bits, scheme.remap_block_bits);
    master = random_permutation(blocks, rng);
  } else if (scheme.scheme == Scheme::BloomFilter) {
    shape = bloom_shape(template_bits, scheme.bloom_block_width,
                        scheme.bloom_block_height);
  }

  auto draw = [&]() {
    ProtectionKey key;
    switch (scheme.scheme) {
      case Scheme::XorSalt:
        key.xor_mask = random_template(template_bits, rng);
        break;
      case Scheme::BlockRemap:
        if (scheme.remap_leak_swaps == 0) {
          key.permutation = random_permutation(blocks, rng);
        } else {
          key.permutation = master;
          for (std::size_t s = 0; s < scheme.remap_leak_swaps; ++s) {
            std::swap(key.permutation[uniform_below(rng, blocks)],
                      key.permutation[uniform_below(rng, blocks)]);
          }
        }
        break;
      case Scheme::BloomFilter:
        key.column_keys.resize(shape.columns);
        for (auto& c : key.column_keys) {
          c = static_cast<std::uint32_t>(uniform_below(rng, shape.filter_bits));
        }
        break;
      case Scheme::None:
        break;
    }
    return key;
  };

  constexpr int kMaxRedraws = 64;
  for (std::size_t k = 0; k < keys; ++k) {
    ProtectionKey key = draw();
    int redraws = 0;
    while (scheme.scheme != Scheme::None &&
           std::any_of(ring.keys_.begin(), ring.keys_.end(),
                       [&](const ProtectionKey& other) { return same_key(key, other); })) {
      if (++redraws > kMaxRedraws) {
        throw Error(ErrorCode::InvalidConfig,
                    "key space too small for " + std::to_string(keys) + " distinct keys");
      }
      key = draw();
    }
    ring.keys_.push_back(std::move(key));
  }
  return ring;
}

std::vector<std::size_t> KeyRing::relation(std::size_t from, std::size_t to) const {
  const std::size_t bits = protected_bits(scheme_, template_bits_);
  std::vector<std::size_t> r(bits);
  std::iota(r.begin(), r.end(), std::size_t{0});
  if (scheme_.scheme != Scheme::BlockRemap) return r;

  const auto& p_from = key(from).permutation;
  const auto& p_to = key(to).permutation;
  std::vector<std::size_t> inv_to(p_to.size());
  for (std::size_t i = 0; i < p_to.size(); ++i) inv_to[p_to[i]] = i;
  const std::size_t width = scheme_.remap_block_bits;
  for (std::size_t block = 0; block < p_from.size(); ++block) {
    const std::size_t source = inv_to[p_from[block]];
    for (std::size_t t = 0; t < width; ++t) r[block * width + t] = source * width + t;
  }
  return r;
}

ProtectedTemplate xor_salt(const BitTemplate& raw, const BitTemplate& key, int key_id) {
  if (raw.size() != key.size()) {
    throw Error(ErrorCode::LengthMismatch, "XOR key length differs from template length");
  }
  return {raw ^ key, key_id, Scheme::XorSalt};
}

ProtectedTemplate block_remap(const BitTemplate& raw,
                              std::span<const std::size_t> permutation,
                              std::size_t block_bits, int key_id) {
  const std::size_t blocks = remap_blocks(raw.size(), block_bits);
  check_bijection(permutation, blocks);
  BitTemplate out(raw.size());
  for (std::size_t block = 0; block < blocks; ++block) {
    const std::size_t src = permutation[block] * block_bits;
    const std::size_t dst = block * block_bits;
    for (std::size_t t = 0; t < block_bits; ++t) {
      if (raw.test(src + t)) out.set(dst + t);
    }
  }
  return {std::move(out), key_id, Scheme::BlockRemap};
}

ProtectedTemplate bloom_protect(const BitTemplate& raw,
                                std::span<const std::uint32_t> column_keys,
                                std::size_t block_width, std::size_t block_height,
                                int key_id) {
  const auto shape = bloom_shape(raw.size(), block_width, block_height);
  if (column_keys.size() != shape.columns) {
    throw Error(ErrorCode::ShapeMismatch,
                "expected " + std::to_string(shape.columns) + " column keys");
  }
  BitTemplate out(shape.blocks * shape.filter_bits);
  for (std::size_t c = 0; c < shape.columns; ++c) {
    std::uint32_t index = 0;
    for (std::size_t r = 0; r < block_height; ++r) {
      index = (index << 1) | (raw.test(r * shape.columns + c) ? 1U : 0U);
    }
    index ^= column_keys[c] & static_cast<std::uint32_t>(shape.filter_bits - 1);
    out.set((c / block_width) * shape.filter_bits + index);
  }
  return {std::move(out), key_id, Scheme::BloomFilter};
}

ProtectedTemplate protect(const BitTemplate& raw, const KeyRing& keys,
                          std::size_t key_id) {
  const auto& key = keys.key(key_id);
  const auto& s = keys.scheme();
  const int id = static_cast<int>(key_id);
  switch (s.scheme) {
    case Scheme::XorSalt: return xor_salt(raw, key.xor_mask, id);
    case Scheme::BlockRemap:
      return block_remap(raw, key.permutation, s.remap_block_bits, id);
    case Scheme::BloomFilter:
      return bloom_protect(raw, key.column_keys, s.bloom_block_width,
                           s.bloom_block_height, id);
    case Scheme::None: return {raw, id, Scheme::None};
  }
  throw Error(ErrorCode::InvariantViolation, "unhandled scheme");
}

BitTemplate reconstruct(const ProtectedTemplate& t, const KeyRing& keys,
                        bool approximate_bloom) {
  if (t.scheme != keys.scheme().scheme) {
    throw Error(ErrorCode::SchemeMismatch, "template and key ring use different schemes");
  }
  const auto& key = keys.key(static_cast<std::size_t>(t.key_id));
  const auto& s = keys.scheme();
  switch (t.scheme) {
    case Scheme::None: return t.bits;
    case Scheme::XorSalt: return t.bits ^ key.xor_mask;
    case Scheme::BlockRemap: {
      BlockPermutation inverse(key.permutation.size());
      for (std::size_t i = 0; i < inverse.size(); ++i) inverse[key.permutation[i]] = i;
      return block_remap(t.bits, inverse, s.remap_block_bits).bits;
    }
    case Scheme::BloomFilter: {
      if (!approximate_bloom) {
        throw Error(ErrorCode::SchemeNotInvertible,
                    "Bloom filter templates cannot be inverted exactly; enable the "
                    "experimental approximate decoder");
      }
      const std::size_t h = s.bloom_block_height;
      const std::size_t w = s.bloom_block_width;
      const auto shape = bloom_shape(keys.template_bits(), w, h);
      BitTemplate raw(keys.template_bits());
      for (std::size_t block = 0; block < shape.blocks; ++block) {
        // Set filter bits in ascending order are assigned to the block's
        // columns left to right; surplus columns stay zero.
        std::size_t column = 0;
        for (std::size_t idx = 0; idx < shape.filter_bits && column < w; ++idx) {
          if (!t.bits.test(block * shape.filter_bits + idx)) continue;
          const std::size_t c = block * w + column++;
          const auto value = static_cast<std::uint32_t>(idx) ^ key.column_keys[c];
          for (std::size_t r = 0; r < h; ++r) {
            if ((value >> (h - 1 - r)) & 1U) raw.set(r * shape.columns + c);
          }
        }
      }
      return raw;
    }
  }
  throw Error(ErrorCode::InvariantViolation, "unhandled scheme");
}

ProtectedDatabase protect_corpus(const Corpus& corpus, const KeyRing& keys,
                                 std::size_t key_id) {
  ProtectedDatabase db;
  db.key_id = static_cast<int>(key_id);
  db.scheme = keys.scheme().scheme;
  db.templates.resize(corpus.samples.size());
  for (std::size_t s = 0; s < corpus.samples.size(); ++s) {
    db.templates[s].reserve(corpus.samples[s].size());
    for (const auto& raw : corpus.samples[s]) {
      db.templates[s].push_back(protect(raw, keys, key_id));
    }
  }
  return db;
}

// --- linkage functions ---------------------------------------------------------

namespace {

void check_comparable(const ProtectedTemplate& a, const ProtectedTemplate& b) {
  if (a.scheme != b.scheme) {
    throw Error(ErrorCode::SchemeMismatch,
                std::string("cannot compare ") + to_string(a.scheme) + " with " +
                    to_string(b.scheme) + " templates");
  }
  if (a.bits.size() != b.bits.size()) {
    throw Error(ErrorCode::LengthMismatch, "templates differ in length");
  }
}

}  // namespace

double linkage_pic_hd(const ProtectedTemplate& a, const ProtectedTemplate& b) {
  check_comparable(a, b);
  if (a.scheme == Scheme::BloomFilter) {
    const auto total = a.bits.popcount() + b.bits.popcount();
    if (total == 0) return 0.0;
    return static_cast<double>(hamming_distance(a.bits, b.bits)) /
           static_cast<double>(total);
  }
  return normalized_hamming_distance(a.bits, b.bits);
}

double linkage_hamming_weight(const ProtectedTemplate& a, const ProtectedTemplate& b) {
  if (a.bits.size() != b.bits.size()) {
    throw Error(ErrorCode::LengthMismatch, "templates differ in length");
  }
  if (a.bits.size() == 0) return 0.0;
  const auto wa = static_cast<double>(a.bits.popcount());
  const auto wb = static_cast<double>(b.bits.popcount());
  return std::abs(wa - wb) / static_cast<double>(a.bits.size());
}

double linkage_permuted_xor(const ProtectedTemplate& a, const ProtectedTemplate& b,
                            std::span<const std::size_t> relation) {
  const std::size_t n = a.bits.size();
  if (b.bits.size() != n || relation.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "relation and templates differ in length");
  }
  if (n == 0) return 0.0;
  std::size_t d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a.bits.test(i) != b.bits.test(relation[i])) ++d;
  }
  return static_cast<double>(d) / static_cast<double>(n);
}

double linkage_reconstruction(const ProtectedTemplate& a, const ProtectedTemplate& b,
                              const KeyRing& keys, bool approximate_bloom) {
  check_comparable(a, b);
  return normalized_hamming_distance(reconstruct(a, keys, approximate_bloom),
                                     reconstruct(b, keys, approximate_bloom));
}

// --- container -------------------------------------------------------------------

namespace {

constexpr std::array<char, 4> kMagic{'U', 'L', 'B', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  auto v = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error(ErrorCode::ParseError, "truncated template container");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{bytes[i]} << (8 * i);
  return static_cast<T>(v);
}

void write_container(const std::filesystem::path& path, Scheme scheme, int key_id,
                     const std::vector<std::vector<const BitTemplate*>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  const std::size_t samples = rows.empty() ? 0 : rows.front().size();
  const std::size_t bits = samples == 0 ? 0 : rows.front().front()->size();
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kContainerVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(scheme));
  put<std::int32_t>(out, key_id);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(rows.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(samples));
  put<std::uint64_t>(out, bits);
  for (const auto& row : rows) {
    for (const auto* t : row) {
      if (t->size() != bits) {
        throw Error(ErrorCode::LengthMismatch, "container templates differ in length");
      }
      for (auto w : t->words()) put<std::uint64_t>(out, w);
    }
  }
}

}  // namespace

void write_database(const std::filesystem::path& path, const ProtectedDatabase& db) {
  std::vector<std::vector<const BitTemplate*>> rows(db.templates.size());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (const auto& t : db.templates[s]) rows[s].push_back(&t.bits);
  }
  write_container(path, db.scheme, db.key_id, rows);
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::vector<std::vector<const BitTemplate*>> rows(corpus.samples.size());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (const auto& t : corpus.samples[s]) rows[s].push_back(&t);
  }
  write_container(path, Scheme::None, -1, rows);
}

ProtectedDatabase read_database(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw Error(ErrorCode::ParseError, path.string() + " is not a template container");
  }
  if (get<std::uint32_t>(in) != kContainerVersion) {
    throw Error(ErrorCode::ParseError, "unsupported container version");
  }
  const auto scheme_raw = get<std::uint32_t>(in);
  if (scheme_raw > static_cast<std::uint32_t>(Scheme::None)) {
    throw Error(ErrorCode::ParseError, "unknown scheme in container");
  }
  ProtectedDatabase db;
  db.scheme = static_cast<Scheme>(scheme_raw);
  db.key_id = get<std::int32_t>(in);
  const auto subjects = get<std::uint32_t>(in);
  const auto samples = get<std::uint32_t>(in);
  const auto bits = get<std::uint64_t>(in);
  db.templates.resize(subjects);
  for (auto& row : db.templates) {
    row.reserve(samples);
    for (std::uint32_t i = 0; i < samples; ++i) {
      ProtectedTemplate t{BitTemplate(bits), db.key_id, db.scheme};
      for (auto& w : t.bits.words()) w = get<std::uint64_t>(in);
      row.push_back(std::move(t));
    }
  }
  return db;
}

}  // namespace unlinkeval
