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

#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

#include "oracle.hpp"
#include "unlink/synthbtp.hpp"

using namespace unlinkeval;

namespace {

BitTemplate bits(const char* s) { return BitTemplate::from_string(s); }

ProtectedTemplate plain(const char* s) { return {bits(s), 0, Scheme::None}; }

std::string random_bits(std::size_t n, std::mt19937_64& rng) {
  std::string s(n, '0');
  for (auto& c : s) c = (rng() & 1U) ? '1' : '0';
  return s;
}

}  // namespace

TEST_SUITE("synthbtp") {

TEST_CASE("bit template basics") {
  const auto t = bits("1010");
  CHECK(t.size() == 4);
  CHECK(t.test(0));
  CHECK_FALSE(t.test(1));
  CHECK(t.to_string() == "1010");
  CHECK(t.popcount() == 2);
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 63u, 64u, 65u, 200u}) {
    const auto a = random_bits(n, rng), b = random_bits(n, rng);
    CHECK(BitTemplate::from_string(a).to_string() == a);
    CHECK(hamming_distance(BitTemplate::from_string(a), BitTemplate::from_string(b)) ==
          static_cast<std::size_t>(oracle::popcount_string_diff(a, b)));
  }
  CHECK_THROWS_AS(BitTemplate::from_string("10x1"), Error);
  CHECK_THROWS_AS(hamming_distance(bits("10"), bits("101")), Error);
}

TEST_CASE("XOR salting") {
  CHECK(xor_salt(bits("1010"), bits("1111")).bits.to_string() == "0101");
  std::mt19937_64 rng(1);
  const auto t = BitTemplate::from_string(random_bits(300, rng));
  const auto k = BitTemplate::from_string(random_bits(300, rng));
  CHECK(xor_salt(xor_salt(t, k).bits, k).bits == t);
  CHECK(xor_salt(t, BitTemplate(300)).bits == t);
  try {
    (void)xor_salt(t, BitTemplate(299));
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("block remapping") {
  // Blocks A=00 B=01 C=10 D=11 (bit strings are bit 0 first).
  const auto t = bits("00011011");
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  CHECK(block_remap(t, perm, 2).bits.to_string() == "10001101");  // C A D B
  const std::vector<std::size_t> id{0, 1, 2, 3};
  CHECK(block_remap(t, id, 2).bits == t);
  try {
    (void)block_remap(t, std::vector<std::size_t>{0, 0, 1, 2}, 2);
    FAIL("expected NotBijective");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotBijective);
  }
  try {
    (void)block_remap(bits("0001101"), std::vector<std::size_t>{0, 1, 2}, 2);
    FAIL("expected NotDivisible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotDivisible);
  }
}

TEST_CASE("Bloom filter encoding") {
  // h = 2 rows, 3 columns: row 0 = 010, row 1 = 111, so columns read
  // (row 0 as MSB) 01, 11, 01 -> indices 1, 3, 1 -> filter 0101.
  const std::vector<std::uint32_t> zero{0, 0, 0};
  CHECK(bloom_protect(bits("010111"), zero, 3, 2).bits.to_string() == "0101");
  CHECK(bloom_protect(bits("000000"), zero, 3, 2).bits.to_string() == "1000");
  // A column key flips the column value before indexing.
  const std::vector<std::uint32_t> key{1, 0, 0};
  CHECK(bloom_protect(bits("000000"), key, 3, 2).bits.to_string() == "1100");
  try {
    (void)bloom_protect(bits("0101110"), std::vector<std::uint32_t>{0, 0, 0}, 3, 2);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("linkage functions on small templates") {
  CHECK(linkage_pic_hd(plain("1100"), plain("1100")) == 0.0);
  CHECK(linkage_pic_hd(plain("1100"), plain("0011")) == 1.0);
  CHECK(linkage_pic_hd(plain("1100"), plain("1010")) == 0.5);
  CHECK(linkage_hamming_weight(plain("1100"), plain("1100")) == 0.0);
  CHECK(linkage_hamming_weight(plain("1100"), plain("1110")) == 0.25);
  CHECK(linkage_hamming_weight(plain("1111"), plain("0000")) == 1.0);
  const std::vector<std::size_t> id{0, 1, 2, 3};
  CHECK(linkage_permuted_xor(plain("1101"), plain("1101"), id) == 0.0);
  CHECK_THROWS_AS(linkage_pic_hd(plain("1100"), plain("110")), Error);
  ProtectedTemplate x{bits("1100"), 0, Scheme::XorSalt};
  CHECK_THROWS_AS(linkage_pic_hd(x, plain("1100")), Error);
}

TEST_CASE("corpus statistics") {
  CorpusConfig cfg;
  cfg.n_subjects = 20;
  cfg.intra_flip_rate = 0.0;
  auto c = generate_corpus(cfg);
  CHECK(c.samples.size() == 20);
  for (const auto& s : c.samples) {
    CHECK(s.size() == 4);
    for (const auto& t : s) CHECK(normalized_hamming_distance(t, s[0]) == 0.0);
  }
  cfg.intra_flip_rate = 0.1;
  double mated = 0, non_mated = 0;
  int nm = 0, nn = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.seed = seed;
    c = generate_corpus(cfg);
    for (std::size_t s = 0; s < c.samples.size(); ++s) {
      mated += normalized_hamming_distance(c.sample(s, 0), c.sample(s, 1));
      ++nm;
      if (s > 0) {
        non_mated += normalized_hamming_distance(c.sample(s, 0), c.sample(s - 1, 0));
        ++nn;
      }
    }
  }
  CHECK(mated / nm == doctest::Approx(2 * 0.1 * 0.9).epsilon(0.02));
  CHECK(non_mated / nn == doctest::Approx(0.5).epsilon(0.01));

  cfg.n_subjects = 1;
  try {
    (void)generate_corpus(cfg);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
  cfg.n_subjects = 10;
  cfg.intra_flip_rate = 0.6;
  CHECK_THROWS_AS(generate_corpus(cfg), Error);
}

TEST_CASE("corpus generation is deterministic") {
  CorpusConfig cfg;
  cfg.n_subjects = 10;
  cfg.template_bits = 512;
  cfg.seed = 42;
  const auto a = generate_corpus(cfg);
  const auto b = generate_corpus(cfg);
  CHECK(a.samples == b.samples);
  cfg.seed = 43;
  CHECK_FALSE(generate_corpus(cfg).samples == a.samples);
  // Subjects draw from independent streams: growing the corpus keeps the
  // existing subjects.
  cfg.seed = 42;
  cfg.n_subjects = 12;
  const auto bigger = generate_corpus(cfg);
  for (std::size_t s = 0; s < 10; ++s) CHECK(bigger.samples[s] == a.samples[s]);
}

TEST_CASE("outliers are independent of the subject") {
  CorpusConfig cfg;
  cfg.n_subjects = 200;
  cfg.outlier_rate = 1.0;
  const auto c = generate_corpus(cfg);
  double acc = 0;
  for (std::size_t s = 0; s < c.samples.size(); ++s) {
    acc += normalized_hamming_distance(c.sample(s, 0), c.sample(s, 1));
  }
  CHECK(acc / c.samples.size() == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("key rings hold distinct keys") {
  for (auto scheme : {Scheme::XorSalt, Scheme::BlockRemap, Scheme::BloomFilter}) {
    SchemeConfig sc;
    sc.scheme = scheme;
    const auto ring = KeyRing::generate(sc, 4096, 10, 7);
    CHECK(ring.size() == 10);
    std::set<std::string> seen;
    for (std::size_t k = 0; k < 10; ++k) {
      const auto& key = ring.key(k);
      std::string fp = key.xor_mask.to_string();
      for (auto p : key.permutation) fp += "," + std::to_string(p);
      for (auto v : key.column_keys) fp += ";" + std::to_string(v);
      seen.insert(fp);
    }
    CHECK(seen.size() == 10);
  }
  SchemeConfig leaky;
  leaky.scheme = Scheme::BlockRemap;
  leaky.remap_leak_swaps = 4;
  const auto ring = KeyRing::generate(leaky, 4096, 6, 9);
  // Leaky keys differ from each other in only a few blocks.
  for (std::size_t k = 1; k < 6; ++k) {
    std::size_t differ = 0;
    for (std::size_t i = 0; i < ring.key(0).permutation.size(); ++i) {
      differ += ring.key(0).permutation[i] != ring.key(k).permutation[i];
    }
    CHECK(differ > 0);
    CHECK(differ <= 16);
  }
}

TEST_CASE("protection preserves Hamming distance where it should") {
  CorpusConfig cfg;
  cfg.n_subjects = 10;
  const auto c = generate_corpus(cfg);
  for (auto scheme : {Scheme::XorSalt, Scheme::BlockRemap, Scheme::None}) {
    SchemeConfig sc;
    sc.scheme = scheme;
    const auto ring = KeyRing::generate(sc, cfg.template_bits, 3, 5);
    for (std::size_t s = 0; s < 10; ++s) {
      const auto a = protect(c.sample(s, 0), ring, 1);
      const auto b = protect(c.sample((s + 3) % 10, 1), ring, 1);
      CHECK(hamming_distance(a.bits, b.bits) ==
            hamming_distance(c.sample(s, 0), c.sample((s + 3) % 10, 1)));
      CHECK(reconstruct(a, ring) == c.sample(s, 0));
    }
  }
}

TEST_CASE("adversarial linkage functions") {
  CorpusConfig cfg;
  cfg.n_subjects = 30;
  const auto c = generate_corpus(cfg);

  SchemeConfig xs;
  const auto xor_ring = KeyRing::generate(xs, cfg.template_bits, 2, 3);
  // Identical raw samples under two keys reconstruct to HD 0.
  CHECK(linkage_reconstruction(protect(c.sample(0, 0), xor_ring, 0),
                               protect(c.sample(0, 0), xor_ring, 1), xor_ring) == 0.0);
  double nm = 0;
  for (std::size_t s = 1; s < 30; ++s) {
    nm += linkage_reconstruction(protect(c.sample(0, 0), xor_ring, 0),
                                 protect(c.sample(s, 0), xor_ring, 1), xor_ring);
  }
  CHECK(nm / 29 == doctest::Approx(0.5).epsilon(0.02));

  SchemeConfig rs;
  rs.scheme = Scheme::BlockRemap;
  const auto remap_ring = KeyRing::generate(rs, cfg.template_bits, 2, 3);
  for (std::size_t s = 0; s < 5; ++s) {
    const auto a = protect(c.sample(s, 0), remap_ring, 0);
    const auto b = protect(c.sample(s, 1), remap_ring, 1);
    const double raw = normalized_hamming_distance(c.sample(s, 0), c.sample(s, 1));
    CHECK(linkage_reconstruction(a, b, remap_ring) == raw);
    // The true inter-key relation aligns the layouts exactly.
    const auto r = remap_ring.relation(0, 1);
    CHECK(linkage_permuted_xor(a, b, r) == raw);
    CHECK(linkage_permuted_xor(a, protect(c.sample(s, 0), remap_ring, 1), r) == 0.0);
  }
  // Identity relation on unrelated templates: about one half.
  std::vector<std::size_t> id(cfg.template_bits);
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;
  CHECK(linkage_permuted_xor(protect(c.sample(0, 0), remap_ring, 0),
                             protect(c.sample(1, 0), remap_ring, 1), id) ==
        doctest::Approx(0.5).epsilon(0.05));

  SchemeConfig bs;
  bs.scheme = Scheme::BloomFilter;
  const auto bloom_ring = KeyRing::generate(bs, cfg.template_bits, 2, 3);
  const auto a = protect(c.sample(0, 0), bloom_ring, 0);
  try {
    (void)reconstruct(a, bloom_ring);
    FAIL("expected SchemeNotInvertible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemeNotInvertible);
  }
  CHECK(reconstruct(a, bloom_ring, true).size() == cfg.template_bits);
  CHECK(linkage_pic_hd(a, a) == 0.0);
}

TEST_CASE("binary container round trip") {
  const auto dir = oracle::scratch_dir("synth_container");
  CorpusConfig cfg;
  cfg.n_subjects = 5;
  cfg.template_bits = 100;
  const auto c = generate_corpus(cfg);
  SchemeConfig sc;
  const auto ring = KeyRing::generate(sc, 100, 2, 1);
  const auto db = protect_corpus(c, ring, 1);
  write_database(dir / "db.ulbt", db);
  const auto back = read_database(dir / "db.ulbt");
  CHECK(back.key_id == 1);
  CHECK(back.scheme == Scheme::XorSalt);
  REQUIRE(back.subjects() == 5);
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t i = 0; i < 4; ++i) CHECK(back.templates[s][i].bits == db.templates[s][i].bits);
  write_corpus(dir / "raw.ulbt", c);
  const auto raw = read_database(dir / "raw.ulbt");
  CHECK(raw.key_id == -1);
  CHECK(raw.templates[2][3].bits == c.sample(2, 3));
  std::ofstream(dir / "bad.ulbt") << "NOPE";
  CHECK_THROWS_AS(read_database(dir / "bad.ulbt"), Error);
}

TEST_CASE("deterministic randomness helpers") {
  CHECK(derive_seed(1, 0, 0) == derive_seed(1, 0, 0));
  CHECK(derive_seed(1, 0, 0) != derive_seed(1, 0, 1));
  CHECK(derive_seed(1, 0, 0) != derive_seed(1, 1, 0));
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(uniform_below(rng, 7) < 7);
  }
  CHECK(parse_scheme("xor") == Scheme::XorSalt);
  CHECK(parse_scheme("bloom") == Scheme::BloomFilter);
  CHECK(parse_scheme("remap") == Scheme::BlockRemap);
  CHECK_THROWS_AS(parse_scheme("rot13"), Error);
}

}  // TEST_SUITE
