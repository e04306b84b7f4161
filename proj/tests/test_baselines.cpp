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

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "unlink/baselines.hpp"

using namespace unlinkeval;

TEST_SUITE("baselines") {

TEST_CASE("KL divergence") {
  const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
  const auto kl = kl_divergence(p, q);
  REQUIRE(kl.has_value());
  CHECK(std::abs(*kl - 0.14384) <= 1e-5);
  CHECK(*kl == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-14));
  CHECK(kl_divergence(p, p) == 0.0);
  CHECK_FALSE(kl_divergence(std::vector<double>{1, 0}, std::vector<double>{0, 1}).has_value());
  CHECK(format_kl(std::nullopt) == "undefined");
  CHECK(format_kl(kl) == "0.14384");
  // Zero entries of P contribute nothing.
  CHECK(kl_divergence(std::vector<double>{0, 1}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)));
}

TEST_CASE("KL matches a direct sum on random pmfs") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng() % 8;
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sp += p[i] = u(rng);
      sq += q[i] = u(rng);
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const auto kl = kl_divergence(p, q);
    REQUIRE(kl.has_value());
    CHECK(*kl >= 0);
    CHECK(*kl == doctest::Approx(oracle::kl(p, q)).epsilon(1e-12));
  }
}

TEST_CASE("KL input validation") {
  try {
    (void)kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  try {
    (void)kl_divergence(std::vector<double>{0.5, 0.6}, std::vector<double>{0.5, 0.5});
    FAIL("expected NotNormalized");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotNormalized);
  }
  CHECK_THROWS_AS(kl_divergence(std::vector<double>{1.5, -0.5}, std::vector<double>{0.5, 0.5}),
                  Error);
}

TEST_CASE("EER of the three-score example") {
  const std::vector<double> m{0.9, 0.8, 0.4}, n{0.6, 0.2, 0.1};
  const auto c = det_curve(m, n, Orientation::Similarity);
  CHECK(c.eer == 1.0 / 3.0);
  const auto sweep = oracle::sweep_similarity(m, n);
  CHECK(sweep.min_gap == 0.0);
  CHECK(c.eer == sweep.rate_at_gap);
  // Mirrored scores with the dissimilarity convention give the same EER.
  std::vector<double> mm, nn;
  for (double s : m) mm.push_back(1 - s);
  for (double s : n) nn.push_back(1 - s);
  CHECK(det_curve(mm, nn, Orientation::Dissimilarity).eer == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("DET curve limits") {
  const auto sep = det_curve(std::vector<double>{0.8, 0.9, 0.95}, std::vector<double>{0.1, 0.2},
                             Orientation::Similarity);
  CHECK(sep.eer == 0.0);
  const auto sep_d = det_curve(std::vector<double>{0.1, 0.2}, std::vector<double>{0.6, 0.7},
                               Orientation::Dissimilarity);
  CHECK(sep_d.eer == 0.0);
  const auto same = det_curve(oracle::normal_sample(20000, 0, 1, 1),
                              oracle::normal_sample(20000, 0, 1, 2), Orientation::Similarity);
  CHECK(same.eer == doctest::Approx(0.5).epsilon(0.03));
  // Curve is monotone: FMR falls and FNMR rises with a similarity threshold.
  for (std::size_t i = 1; i < same.thresholds.size(); ++i) {
    CHECK(same.fmr[i] <= same.fmr[i - 1]);
    CHECK(same.fnmr[i] >= same.fnmr[i - 1]);
  }
  CHECK(same.fmr.front() == 1.0);
  CHECK(same.fnmr.front() == 0.0);
  CHECK(same.fmr.back() == 0.0);
  CHECK(same.fnmr.back() == 1.0);
  CHECK_THROWS_AS(det_curve(std::vector<double>{0.5}, std::vector<double>{0.1, 0.2},
                            Orientation::Similarity),
                  Error);
}

TEST_CASE("EER agrees with the exhaustive sweep where the crossing is exact") {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> m(4 + rng() % 6), n(4 + rng() % 6);
    for (auto& v : m) v = static_cast<double>(rng() % 20);
    for (auto& v : n) v = static_cast<double>(rng() % 14);
    const auto c = det_curve(m, n, Orientation::Similarity);
    const auto sweep = oracle::sweep_similarity(m, n);
    CHECK(c.eer >= 0.0);
    CHECK(c.eer <= 1.0);
    if (sweep.min_gap == 0.0) {
      // Ties resolve to the first exact crossing, which can differ only when
      // a whole FMR=FNMR segment exists; both are equal-rate points then.
      const auto& fmr = c.fmr;
      bool found = false;
      for (std::size_t i = 0; i < fmr.size(); ++i) found |= fmr[i] == c.fnmr[i] && fmr[i] == c.eer;
      CHECK(found);
    } else {
      // Interpolated value lies between the bracketing operating points.
      bool bracketed = false;
      for (std::size_t i = 1; i < c.fmr.size(); ++i) {
        const double lo = std::min({c.fmr[i - 1], c.fmr[i], c.fnmr[i - 1], c.fnmr[i]});
        const double hi = std::max({c.fmr[i - 1], c.fmr[i], c.fnmr[i - 1], c.fnmr[i]});
        bracketed |= c.eer >= lo && c.eer <= hi;
      }
      CHECK(bracketed);
    }
  }
}

TEST_CASE("cross-key DET and RTMR") {
  const auto m = oracle::normal_sample(5000, 0.2, 0.05, 1);
  const auto n = oracle::normal_sample(5000, 0.5, 0.05, 2);
  const ScoreSet single(m, n), cross(oracle::normal_sample(5000, 0.2, 0.05, 3),
                                      oracle::normal_sample(5000, 0.5, 0.05, 4));
  const auto [acc, ck] = cross_key_det(single, cross, Orientation::Dissimilarity);
  CHECK(acc.mode == CurveMode::Accuracy);
  CHECK(ck.mode == CurveMode::CrossKey);
  CHECK(std::abs(acc.eer - ck.eer) < 0.01);
  // Full protection: cross-key mated look non-mated.
  const ScoreSet hidden(oracle::normal_sample(5000, 0.5, 0.05, 5), n);
  CHECK(cross_key_det(single, hidden, Orientation::Dissimilarity).second.eer ==
        doctest::Approx(0.5).epsilon(0.05));

  // RTMR side drawn like the accuracy non-mated side: overlays the DET.
  const auto r = rtmr_curve(m, cross.non_mated(), Orientation::Dissimilarity);
  CHECK(r.mode == CurveMode::Renewable);
  CHECK(std::abs(r.eer - acc.eer) < 0.01);

  // Fully separated: RTMR reaches 1 at FNMR = 0.
  const auto sep = rtmr_curve(std::vector<double>{0.1, 0.2}, std::vector<double>{0.8, 0.9},
                              Orientation::Dissimilarity);
  bool corner = false;
  for (std::size_t i = 0; i < sep.fmr.size(); ++i) corner |= sep.fnmr[i] == 0.0 && sep.fmr[i] == 0.0;
  CHECK(corner);
  CHECK(sep.fmr.back() == 1.0);
  CHECK(sep.fnmr.back() == 0.0);
}

TEST_CASE("RTMR staircase on three-point sets") {
  const std::vector<double> m{0.9, 0.8, 0.4}, n{0.6, 0.2, 0.1};
  const auto r = rtmr_curve(m, n, Orientation::Similarity);
  // Thresholds: 0.1 0.2 0.4 0.6 0.8 0.9 and one past the top.
  const std::vector<double> fmr{1, 2.0 / 3, 1.0 / 3, 1.0 / 3, 0, 0, 0};
  const std::vector<double> fnmr{0, 0, 0, 1.0 / 3, 1.0 / 3, 2.0 / 3, 1};
  REQUIRE(r.thresholds.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(r.fmr[i] == doctest::Approx(fmr[i]));
    CHECK(r.fnmr[i] == doctest::Approx(fnmr[i]));
  }
}

TEST_CASE("thinning keeps ends and EER") {
  const auto c = det_curve(oracle::normal_sample(3000, 0, 1, 1), oracle::normal_sample(3000, 1, 1, 2),
                           Orientation::Dissimilarity);
  const auto t = thin_curve(c, 100);
  CHECK(t.thresholds.size() == 100);
  CHECK(t.thresholds.front() == c.thresholds.front());
  CHECK(t.thresholds.back() == c.thresholds.back());
  CHECK(t.eer == c.eer);
  CHECK(thin_curve(c, 100000).thresholds.size() == c.thresholds.size());
}

}  // TEST_SUITE
