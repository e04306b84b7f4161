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

#include "unlink/protocol.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "unlink/plot.hpp"
#include "unlink/report.hpp"

namespace unlinkeval {

using nlohmann::json;

const char* to_string(LinkageFunction f) {
  switch (f) {
    case LinkageFunction::PicHd: return "pic_hd";
    case LinkageFunction::HammingWeight: return "hamming_weight";
    case LinkageFunction::PermutedXor: return "permuted_xor";
    case LinkageFunction::Reconstruction: return "reconstruction";
  }
  return "unknown";
}

const char* to_string(AdversaryModel m) {
  switch (m) {
    case AdversaryModel::TemplateOnly: return "template_only";
    case AdversaryModel::KeyKnowledge: return "key_knowledge";
    case AdversaryModel::StructuralKnowledge: return "structural_knowledge";
  }
  return "unknown";
}

LinkageFunction parse_linkage_function(std::string_view name) {
  for (auto f : {LinkageFunction::PicHd, LinkageFunction::HammingWeight,
                 LinkageFunction::PermutedXor, LinkageFunction::Reconstruction}) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorCode::InvalidConfig,
              "unknown linkage function '" + std::string(name) +
                  "' (expected pic_hd, hamming_weight, permuted_xor or reconstruction)");
}

AdversaryModel parse_adversary_model(std::string_view name) {
  for (auto m : {AdversaryModel::TemplateOnly, AdversaryModel::KeyKnowledge,
                 AdversaryModel::StructuralKnowledge}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown adversary model '" + std::string(name) + "'");
}

AdversaryModel adversary_model(LinkageFunction f) {
  switch (f) {
    case LinkageFunction::PicHd:
    case LinkageFunction::HammingWeight: return AdversaryModel::TemplateOnly;
    case LinkageFunction::PermutedXor: return AdversaryModel::StructuralKnowledge;
    case LinkageFunction::Reconstruction: return AdversaryModel::KeyKnowledge;
  }
  return AdversaryModel::TemplateOnly;
}

namespace {

std::size_t choose2(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

}  // namespace

PairCounts expected_pair_counts(std::size_t subjects, std::size_t samples,
                                std::size_t keys, const PairingRule& rule) {
  PairCounts c;
  c.mated = rule.mated == PairingRule::Mated::DistinctSamples
                ? subjects * choose2(samples) * choose2(keys)
                : subjects * (choose2(samples * keys) - keys * choose2(samples));
  c.non_mated = rule.non_mated == PairingRule::NonMated::FirstSample
                    ? choose2(subjects) * choose2(keys)
                    : choose2(subjects) * samples * samples * keys * (keys - 1);
  return c;
}

void check_supported(LinkageFunction f, Scheme scheme, bool experimental) {
  if (f == LinkageFunction::Reconstruction && scheme == Scheme::BloomFilter &&
      !experimental) {
    throw Error(ErrorCode::SchemeNotInvertible,
                "reconstruction of Bloom filter templates requires the experimental "
                "approximate decoder");
  }
}

double link(LinkageFunction f, const ProtectedTemplate& a, const ProtectedTemplate& b,
            const LinkageContext& ctx) {
  switch (f) {
    case LinkageFunction::PicHd: return linkage_pic_hd(a, b);
    case LinkageFunction::HammingWeight: return linkage_hamming_weight(a, b);
    case LinkageFunction::PermutedXor:
    case LinkageFunction::Reconstruction:
      if (ctx.keys == nullptr) {
        throw Error(ErrorCode::InvalidConfig,
                    std::string(to_string(f)) + " needs the key ring");
      }
      check_supported(f, a.scheme, ctx.experimental);
      if (f == LinkageFunction::PermutedXor) {
        const auto r = ctx.keys->relation(static_cast<std::size_t>(a.key_id),
                                          static_cast<std::size_t>(b.key_id));
        return linkage_permuted_xor(a, b, r);
      }
      return linkage_reconstruction(a, b, *ctx.keys, ctx.experimental);
  }
  throw Error(ErrorCode::InvariantViolation, "unhandled linkage function");
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("UNLINK_EVAL_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(worker_threads(), std::max<std::size_t>(1, n / 4096));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * n / workers; i < (w + 1) * n / workers; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// One comparison: reference template (db, subject, sample) against probe.
struct Comparison {
  std::uint32_t ref_db, ref_subject, ref_sample;
  std::uint32_t probe_db, probe_subject, probe_sample;
};

// Precomputes the template views each linkage function compares, so the
// per-pair work is a popcount.
class Scorer {
 public:
  Scorer(std::span<const ProtectedDatabase> dbs, LinkageFunction f,
         const LinkageContext& ctx, const std::vector<Comparison>& pairs)
      : dbs_(dbs), f_(f), ctx_(ctx) {
    if (f_ == LinkageFunction::PermutedXor || f_ == LinkageFunction::Reconstruction) {
      if (ctx_.keys == nullptr) {
        throw Error(ErrorCode::InvalidConfig,
                    std::string(to_string(f_)) + " needs the key ring");
      }
      if (ctx_.keys->scheme().scheme != dbs_.front().scheme) {
        throw Error(ErrorCode::SchemeMismatch,
                    "key ring scheme differs from the databases' scheme");
      }
    }
    check_supported(f_, dbs_.front().scheme, ctx_.experimental);
    if (f_ == LinkageFunction::Reconstruction) {
      reconstructed_.resize(dbs_.size());
      for (std::size_t d = 0; d < dbs_.size(); ++d) {
        for (const auto& row : dbs_[d].templates) {
          auto& out = reconstructed_[d].emplace_back();
          for (const auto& t : row) {
            out.push_back(reconstruct(t, *ctx_.keys, ctx_.experimental));
          }
        }
      }
    }
    if (f_ == LinkageFunction::PermutedXor &&
        dbs_.front().scheme == Scheme::BlockRemap) {
      std::set<std::pair<std::uint32_t, std::uint32_t>> frames;
      for (const auto& p : pairs) frames.emplace(p.ref_db, p.probe_db);
      for (const auto& [ref, probe] : frames) {
        const auto r = ctx_.keys->relation(static_cast<std::size_t>(dbs_[ref].key_id),
                                           static_cast<std::size_t>(dbs_[probe].key_id));
        auto& rows = moved_[{ref, probe}];
        for (const auto& row : dbs_[probe].templates) {
          auto& out = rows.emplace_back();
          for (const auto& t : row) {
            BitTemplate m(t.bits.size());
            for (std::size_t i = 0; i < r.size(); ++i) {
              if (t.bits.test(r[i])) m.set(i);
            }
            out.push_back(std::move(m));
          }
        }
      }
    }
  }

  double operator()(const Comparison& c) const {
    const auto& a = dbs_[c.ref_db].templates[c.ref_subject][c.ref_sample];
    const auto& b = dbs_[c.probe_db].templates[c.probe_subject][c.probe_sample];
    switch (f_) {
      case LinkageFunction::PicHd: return linkage_pic_hd(a, b);
      case LinkageFunction::HammingWeight: return linkage_hamming_weight(a, b);
      case LinkageFunction::Reconstruction:
        return normalized_hamming_distance(
            reconstructed_[c.ref_db][c.ref_subject][c.ref_sample],
            reconstructed_[c.probe_db][c.probe_subject][c.probe_sample]);
      case LinkageFunction::PermutedXor: {
        const auto it = moved_.find({c.ref_db, c.probe_db});
        if (it == moved_.end()) return normalized_hamming_distance(a.bits, b.bits);
        return normalized_hamming_distance(
            a.bits, it->second[c.probe_subject][c.probe_sample]);
      }
    }
    return 0.0;
  }

 private:
  using Rows = std::vector<std::vector<BitTemplate>>;
  std::span<const ProtectedDatabase> dbs_;
  LinkageFunction f_;
  LinkageContext ctx_;
  std::vector<Rows> reconstructed_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, Rows> moved_;
};

std::vector<double> score_all(std::span<const ProtectedDatabase> dbs, LinkageFunction f,
                              const LinkageContext& ctx,
                              const std::vector<Comparison>& pairs) {
  const Scorer scorer(dbs, f, ctx, pairs);
  std::vector<double> scores(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) { scores[i] = scorer(pairs[i]); });
  return scores;
}

void check_databases(std::span<const ProtectedDatabase> dbs, std::size_t min_count) {
  if (dbs.size() < min_count) {
    throw Error(ErrorCode::InconsistentDatabases,
                "cross-database scores need at least 2 databases, got " +
                    std::to_string(dbs.size()));
  }
  const auto& first = dbs.front();
  if (first.subjects() < 2 || first.samples() < 2) {
    throw Error(ErrorCode::InconsistentDatabases,
                "databases need at least 2 subjects with 2 samples each");
  }
  std::set<int> key_ids;
  for (const auto& db : dbs) {
    if (db.scheme != first.scheme || db.subjects() != first.subjects()) {
      throw Error(ErrorCode::InconsistentDatabases,
                  "databases differ in scheme or subject count");
    }
    for (const auto& row : db.templates) {
      if (row.size() != first.samples()) {
        throw Error(ErrorCode::InconsistentDatabases,
                    "databases differ in samples per subject");
      }
    }
    if (!key_ids.insert(db.key_id).second) {
      throw Error(ErrorCode::InconsistentDatabases,
                  "two databases share key id " + std::to_string(db.key_id));
    }
  }
}

}  // namespace

ScoreSet cross_database_scores(std::span<const ProtectedDatabase> databases,
                               LinkageFunction f, const LinkageContext& ctx,
                               const PairingRule& rule) {
  check_databases(databases, 2);
  const auto K = static_cast<std::uint32_t>(databases.size());
  const auto S = static_cast<std::uint32_t>(databases.front().subjects());
  const auto n = static_cast<std::uint32_t>(databases.front().samples());

  std::vector<Comparison> mated;
  for (std::uint32_t s = 0; s < S; ++s) {
    if (rule.mated == PairingRule::Mated::DistinctSamples) {
      for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
          for (std::uint32_t k = 0; k < K; ++k)
            for (std::uint32_t l = k + 1; l < K; ++l) mated.push_back({k, s, i, l, s, j});
    } else {
      // Slots (sample, key) enumerated as sample * K + key.
      const std::uint32_t slots = n * K;
      for (std::uint32_t x = 0; x < slots; ++x)
        for (std::uint32_t y = x + 1; y < slots; ++y) {
          if (x % K == y % K) continue;
          mated.push_back({x % K, s, x / K, y % K, s, y / K});
        }
    }
  }

  std::vector<Comparison> non_mated;
  for (std::uint32_t a = 0; a < S; ++a) {
    for (std::uint32_t b = a + 1; b < S; ++b) {
      if (rule.non_mated == PairingRule::NonMated::FirstSample) {
        for (std::uint32_t k = 0; k < K; ++k)
          for (std::uint32_t l = k + 1; l < K; ++l) non_mated.push_back({k, a, 0, l, b, 0});
      } else {
        for (std::uint32_t i = 0; i < n; ++i)
          for (std::uint32_t j = 0; j < n; ++j)
            for (std::uint32_t k = 0; k < K; ++k)
              for (std::uint32_t l = 0; l < K; ++l) {
                if (k != l) non_mated.push_back({k, a, i, l, b, j});
              }
      }
    }
  }

  std::vector<Comparison> all(mated);
  all.insert(all.end(), non_mated.begin(), non_mated.end());
  auto scores = score_all(databases, f, ctx, all);
  std::vector<double> non_mated_scores(scores.begin() + static_cast<std::ptrdiff_t>(mated.size()),
                                       scores.end());
  scores.resize(mated.size());
  return ScoreSet(std::move(scores), std::move(non_mated_scores),
                  std::string(to_string(f)) + " across " + std::to_string(K) + " " +
                      to_string(databases.front().scheme) + " databases");
}

ScoreSet same_key_scores(const ProtectedDatabase& database, LinkageFunction f,
                         const LinkageContext& ctx) {
  std::span<const ProtectedDatabase> one(&database, 1);
  check_databases(one, 1);
  const auto S = static_cast<std::uint32_t>(database.subjects());
  const auto n = static_cast<std::uint32_t>(database.samples());
  std::vector<Comparison> pairs;
  for (std::uint32_t s = 0; s < S; ++s)
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j) pairs.push_back({0, s, i, 0, s, j});
  const std::size_t n_mated = pairs.size();
  for (std::uint32_t a = 0; a < S; ++a)
    for (std::uint32_t b = a + 1; b < S; ++b) pairs.push_back({0, a, 0, 0, b, 0});

  auto scores = score_all(one, f, ctx, pairs);
  std::vector<double> non_mated(scores.begin() + static_cast<std::ptrdiff_t>(n_mated),
                                scores.end());
  scores.resize(n_mated);
  return ScoreSet(std::move(scores), std::move(non_mated),
                  std::string(to_string(f)) + " within one " +
                      to_string(database.scheme) + " database");
}

Testbed build_testbed(const CorpusConfig& corpus, const SchemeConfig& scheme,
                      std::size_t keys) {
  Testbed tb{generate_corpus(corpus), KeyRing::generate(scheme, corpus.template_bits,
                                                        keys, corpus.seed),
             {}};
  tb.databases.reserve(keys);
  for (std::size_t k = 0; k < keys; ++k) {
    tb.databases.push_back(protect_corpus(tb.corpus, tb.keys, k));
  }
  return tb;
}

// --- configuration ------------------------------------------------------------

std::vector<std::string> validate(const ProtocolConfig& cfg) {
  std::vector<std::string> warnings;
  if (cfg.keys < 2) {
    throw Error(ErrorCode::InvalidConfig,
                "K must be at least 2 (cross-key comparisons need two keys), got " +
                    std::to_string(cfg.keys));
  }
  if (cfg.keys < kRecommendedKeys) {
    warnings.push_back("K = " + std::to_string(cfg.keys) +
                       " keys; more than 5 are recommended");
  }
  if (cfg.functions.empty() && cfg.score_files.empty()) {
    throw Error(ErrorCode::InvalidConfig, "linkage function list is empty");
  }
  if (!(cfg.prior.omega > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "omega must be positive");
  }
  if (cfg.prior.omega > 1.0) {
    warnings.push_back("omega > 1: mated comparisons assumed more likely than non-mated");
  }
  if (cfg.density.bins && *cfg.density.bins < 2) {
    throw Error(ErrorCode::InvalidConfig, "bins must be at least 2");
  }
  if (cfg.score_files.empty()) {
    validate(cfg.corpus);
    for (auto f : cfg.functions) {
      check_supported(f, cfg.scheme.scheme, cfg.experimental);
    }
  }
  return warnings;
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* k) { return key == k; }) == known.end()) {
      throw Error(ErrorCode::InvalidConfig, "unknown field '" + key + "' in " + where);
    }
  }
}

template <typename T>
T field(const json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

ProtocolConfig protocol_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  reject_unknown(j,
                 {"keys", "functions", "omega", "subjects", "density", "corpus", "scheme",
                  "pairing", "orientation", "experimental", "output_dir", "plots",
                  "write_scores", "description", "score_files"},
                 "config");
  ProtocolConfig cfg;
  const long keys = field<long>(j, "keys", 10);
  if (keys < 0) throw Error(ErrorCode::InvalidConfig, "keys must be non-negative");
  cfg.keys = static_cast<std::size_t>(keys);
  for (const auto& name : field<std::vector<std::string>>(j, "functions", {})) {
    cfg.functions.push_back(parse_linkage_function(name));
  }
  if (j.contains("omega") && j.contains("subjects")) {
    throw Error(ErrorCode::InvalidConfig, "give either omega or subjects, not both");
  }
  if (j.contains("omega")) cfg.prior = PriorConfig::explicit_omega(field<double>(j, "omega", 1.0));
  if (j.contains("subjects")) cfg.prior = PriorConfig::from_enrollment(field<long>(j, "subjects", 2));

  if (j.contains("density")) {
    const auto& d = j.at("density");
    reject_unknown(d, {"bins", "kde", "point_mass"}, "density");
    if (d.contains("bins") && !(d.at("bins").is_string() && d.at("bins") == "auto")) {
      const long bins = field<long>(d, "bins", 0);
      if (bins < 2) throw Error(ErrorCode::InvalidConfig, "bins must be at least 2");
      cfg.density.bins = static_cast<std::size_t>(bins);
    }
    cfg.density.kde = field<bool>(d, "kde", false);
    cfg.density.point_mass = field<bool>(d, "point_mass", true);
  }
  if (j.contains("corpus")) {
    const auto& c = j.at("corpus");
    reject_unknown(c, {"subjects", "samples", "bits", "flip_rate", "outlier_rate", "seed"},
                   "corpus");
    cfg.corpus.n_subjects = field<std::size_t>(c, "subjects", cfg.corpus.n_subjects);
    cfg.corpus.samples_per_subject = field<std::size_t>(c, "samples", cfg.corpus.samples_per_subject);
    cfg.corpus.template_bits = field<std::size_t>(c, "bits", cfg.corpus.template_bits);
    cfg.corpus.intra_flip_rate = field<double>(c, "flip_rate", cfg.corpus.intra_flip_rate);
    cfg.corpus.outlier_rate = field<double>(c, "outlier_rate", cfg.corpus.outlier_rate);
    cfg.corpus.seed = field<std::uint64_t>(c, "seed", cfg.corpus.seed);
  }
  if (j.contains("scheme")) {
    const auto& s = j.at("scheme");
    reject_unknown(s, {"name", "remap_block_bits", "leak_swaps", "bloom_width", "bloom_height"},
                   "scheme");
    cfg.scheme.scheme = parse_scheme(field<std::string>(s, "name", "xor"));
    cfg.scheme.remap_block_bits = field<std::size_t>(s, "remap_block_bits", cfg.scheme.remap_block_bits);
    cfg.scheme.remap_leak_swaps = field<std::size_t>(s, "leak_swaps", cfg.scheme.remap_leak_swaps);
    cfg.scheme.bloom_block_width = field<std::size_t>(s, "bloom_width", cfg.scheme.bloom_block_width);
    cfg.scheme.bloom_block_height = field<std::size_t>(s, "bloom_height", cfg.scheme.bloom_block_height);
  }
  if (j.contains("pairing")) {
    const auto& p = j.at("pairing");
    reject_unknown(p, {"mated", "non_mated"}, "pairing");
    const auto mated = field<std::string>(p, "mated", "distinct_samples");
    const auto non_mated = field<std::string>(p, "non_mated", "first_sample");
    if (mated == "distinct_samples") {
      cfg.pairing.mated = PairingRule::Mated::DistinctSamples;
    } else if (mated == "all_slots") {
      cfg.pairing.mated = PairingRule::Mated::AllSlots;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown mated pairing '" + mated + "'");
    }
    if (non_mated == "first_sample") {
      cfg.pairing.non_mated = PairingRule::NonMated::FirstSample;
    } else if (non_mated == "all_pairs") {
      cfg.pairing.non_mated = PairingRule::NonMated::AllPairs;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown non-mated pairing '" + non_mated + "'");
    }
  }
  const auto orientation = field<std::string>(j, "orientation", "dissimilarity");
  if (orientation == "dissimilarity") {
    cfg.orientation = Orientation::Dissimilarity;
  } else if (orientation == "similarity") {
    cfg.orientation = Orientation::Similarity;
  } else {
    throw Error(ErrorCode::InvalidConfig, "orientation must be similarity or dissimilarity");
  }
  cfg.experimental = field<bool>(j, "experimental", false);
  cfg.output_dir = field<std::string>(j, "output_dir", "");
  cfg.write_plots = field<bool>(j, "plots", true);
  cfg.write_scores = field<bool>(j, "write_scores", true);
  cfg.description = field<std::string>(j, "description", "");

  for (const auto& f : field<json>(j, "score_files", json::array())) {
    reject_unknown(f, {"id", "adversary_model", "mated", "nonmated", "accuracy_mated",
                       "accuracy_nonmated"},
                   "score_files entry");
    ExternalScores e;
    e.id = field<std::string>(f, "id", "");
    if (e.id.empty()) throw Error(ErrorCode::InvalidConfig, "score_files entry needs an id");
    e.model = parse_adversary_model(field<std::string>(f, "adversary_model", "template_only"));
    e.mated = field<std::string>(f, "mated", "");
    e.non_mated = field<std::string>(f, "nonmated", "");
    if (f.contains("accuracy_mated")) e.accuracy_mated = field<std::string>(f, "accuracy_mated", "");
    if (f.contains("accuracy_nonmated")) {
      e.accuracy_non_mated = field<std::string>(f, "accuracy_nonmated", "");
    }
    if (e.accuracy_mated.has_value() != e.accuracy_non_mated.has_value()) {
      throw Error(ErrorCode::InvalidConfig,
                  "accuracy_mated and accuracy_nonmated must be given together");
    }
    cfg.score_files.push_back(std::move(e));
  }
  validate(cfg);
  return cfg;
}

ProtocolConfig load_protocol_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "config is not valid JSON: " + std::string(e.what()));
  }
  auto cfg = protocol_config_from_json(j);
  // Relative paths are resolved against the config file's directory.
  const auto base = path.parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(cfg.output_dir);
  for (auto& e : cfg.score_files) {
    resolve(e.mated);
    resolve(e.non_mated);
    if (e.accuracy_mated) resolve(*e.accuracy_mated);
    if (e.accuracy_non_mated) resolve(*e.accuracy_non_mated);
  }
  return cfg;
}

// --- protocol -------------------------------------------------------------------

inline constexpr std::size_t kReportCurvePoints = 1000;

double aggregate_max(std::span<const FunctionResult> results) {
  double best = 0.0;
  for (const auto& r : results) {
    if (!r.error) best = std::max(best, r.profile.d_sys);
  }
  return best;
}

FunctionResult evaluate_function(std::string id, AdversaryModel model,
                                 const ScoreSet& cross_key,
                                 const std::optional<ScoreSet>& single_key,
                                 const ProtocolConfig& cfg) {
  FunctionResult r;
  r.id = std::move(id);
  r.model = model;
  r.n_mated = cross_key.mated().size();
  r.n_non_mated = cross_key.non_mated().size();
  r.profile = evaluate(cross_key, cfg.prior, cfg.density, r.densities);
  const Eigen::ArrayXd pm = r.densities.mass_mated();
  const Eigen::ArrayXd pn = r.densities.mass_non_mated();
  r.kl = kl_divergence(std::span(pm.data(), static_cast<std::size_t>(pm.size())),
                       std::span(pn.data(), static_cast<std::size_t>(pn.size())));
  r.cross_key = thin_curve(det_curve(cross_key.mated(), cross_key.non_mated(),
                                     cfg.orientation, CurveMode::CrossKey),
                           kReportCurvePoints);
  if (single_key) {
    r.accuracy = thin_curve(det_curve(single_key->mated(), single_key->non_mated(),
                                      cfg.orientation, CurveMode::Accuracy),
                            kReportCurvePoints);
    r.rtmr = thin_curve(rtmr_curve(single_key->mated(), cross_key.non_mated(),
                                   cfg.orientation),
                        kReportCurvePoints);
  }
  return r;
}

namespace {

json pairing_json(const PairingRule& rule) {
  return {{"mated", rule.mated == PairingRule::Mated::DistinctSamples ? "distinct_samples"
                                                                       : "all_slots"},
          {"non_mated", rule.non_mated == PairingRule::NonMated::FirstSample
                            ? "first_sample"
                            : "all_pairs"}};
}

json metadata_json(const ProtocolConfig& cfg) {
  json functions = json::array();
  for (auto f : cfg.functions) {
    functions.push_back({{"id", to_string(f)}, {"adversary_model", to_string(adversary_model(f))}});
  }
  for (const auto& e : cfg.score_files) {
    functions.push_back({{"id", e.id},
                         {"adversary_model", to_string(e.model)},
                         {"mated_file", e.mated.filename().string()},
                         {"nonmated_file", e.non_mated.filename().string()}});
  }
  json m = {{"description", cfg.description},
            {"keys", cfg.keys},
            {"prior",
             {{"omega", cfg.prior.omega},
              {"derivation", to_string(cfg.prior.derivation)},
              {"enrollment_count", cfg.prior.enrollment_count}}},
            {"density",
             {{"bins", cfg.density.bins ? json(*cfg.density.bins) : json("auto")},
              {"kde", cfg.density.kde},
              {"point_mass", cfg.density.point_mass}}},
            {"orientation", to_string(cfg.orientation)},
            {"functions", functions},
            {"experimental", cfg.experimental}};
  if (cfg.score_files.empty()) {
    const auto& c = cfg.corpus;
    const auto counts = expected_pair_counts(c.n_subjects, c.samples_per_subject, cfg.keys,
                                             cfg.pairing);
    m["source"] = "synthetic";
    m["corpus"] = {{"subjects", c.n_subjects},
                   {"samples", c.samples_per_subject},
                   {"bits", c.template_bits},
                   {"flip_rate", c.intra_flip_rate},
                   {"outlier_rate", c.outlier_rate},
                   {"seed", c.seed}};
    m["scheme"] = {{"name", to_string(cfg.scheme.scheme)},
                   {"remap_block_bits", cfg.scheme.remap_block_bits},
                   {"leak_swaps", cfg.scheme.remap_leak_swaps},
                   {"bloom_width", cfg.scheme.bloom_block_width},
                   {"bloom_height", cfg.scheme.bloom_block_height}};
    m["pairing"] = pairing_json(cfg.pairing);
    m["expected_counts"] = {{"mated", counts.mated}, {"non_mated", counts.non_mated}};
  } else {
    m["source"] = "score_files";
  }
  return m;
}

std::string file_stem(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out;
}

void write_function_outputs(const ProtocolConfig& cfg, const FunctionResult& r,
                            const ScoreSet* cross, const std::optional<ScoreSet>& single) {
  if (cfg.output_dir.empty() || r.error) return;
  const auto stem = file_stem(r.id);
  if (cfg.write_scores && cross != nullptr) {
    write_score_column(cfg.output_dir / (stem + "_mated.csv"), cross->mated());
    write_score_column(cfg.output_dir / (stem + "_nonmated.csv"), cross->non_mated());
    if (single) {
      write_score_column(cfg.output_dir / (stem + "_accuracy_mated.csv"), single->mated());
      write_score_column(cfg.output_dir / (stem + "_accuracy_nonmated.csv"),
                         single->non_mated());
    }
  }
  if (cfg.write_plots) {
    PlotSpec spec{r.densities, r.profile,
                  r.id + ": D_sys = " + format_d_sys(r.profile.d_sys) +
                      " (omega = " + format_score(r.profile.omega) + ")"};
    write_text(cfg.output_dir / (stem + "_linkability.svg"), render_linkability_svg(spec));
  }
}

}  // namespace

EvaluationReport run_protocol(const ProtocolConfig& cfg) {
  EvaluationReport report;
  report.warnings = validate(cfg);
  report.metadata = metadata_json(cfg);
  if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);

  auto record_failure = [&](std::string id, AdversaryModel model, const std::exception& e) {
    FunctionResult r;
    r.id = std::move(id);
    r.model = model;
    r.error = e.what();
    report.per_function.push_back(std::move(r));
  };

  if (!cfg.score_files.empty()) {
    for (const auto& e : cfg.score_files) {
      try {
        const auto cross = load_score_set(e.mated, e.non_mated);
        std::optional<ScoreSet> single;
        if (e.accuracy_mated) single = load_score_set(*e.accuracy_mated, *e.accuracy_non_mated);
        auto r = evaluate_function(e.id, e.model, cross, single, cfg);
        write_function_outputs(cfg, r, nullptr, std::nullopt);
        report.per_function.push_back(std::move(r));
      } catch (const Error& err) {
        if (err.code() == ErrorCode::InvariantViolation) throw;
        record_failure(e.id, e.model, err);
      }
    }
  } else {
    const auto testbed = build_testbed(cfg.corpus, cfg.scheme, cfg.keys);
    const LinkageContext ctx{&testbed.keys, cfg.experimental};
    for (auto f : cfg.functions) {
      try {
        const auto cross = cross_database_scores(testbed.databases, f, ctx, cfg.pairing);
        const std::optional<ScoreSet> single = same_key_scores(testbed.databases.front(), f, ctx);
        auto r = evaluate_function(to_string(f), adversary_model(f), cross, single, cfg);
        write_function_outputs(cfg, r, &cross, single);
        report.per_function.push_back(std::move(r));
      } catch (const Error& err) {
        if (err.code() == ErrorCode::InvariantViolation) throw;
        record_failure(to_string(f), adversary_model(f), err);
      }
    }
  }

  report.aggregated_d_sys = aggregate_max(report.per_function);
  double best = -1.0;
  for (const auto& r : report.per_function) {
    if (!r.error && r.profile.d_sys > best) {
      best = r.profile.d_sys;
      report.most_linkable = r.id;
    }
  }
  if (!cfg.output_dir.empty()) write_json(cfg.output_dir / "report.json", to_json(report));
  return report;
}

}  // namespace unlinkeval
