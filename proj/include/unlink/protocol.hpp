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

#ifndef UNLINK_PROTOCOL_HPP
#define UNLINK_PROTOCOL_HPP

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "unlink/baselines.hpp"
#include "unlink/density.hpp"
#include "unlink/linkability.hpp"
#include "unlink/score_model.hpp"
#include "unlink/synthbtp.hpp"

namespace unlinkeval {

enum class LinkageFunction { PicHd, HammingWeight, PermutedXor, Reconstruction };

/// What the attacker is assumed to know when using a linkage function.
enum class AdversaryModel { TemplateOnly, KeyKnowledge, StructuralKnowledge };

const char* to_string(LinkageFunction f);
const char* to_string(AdversaryModel m);
LinkageFunction parse_linkage_function(std::string_view name);
AdversaryModel parse_adversary_model(std::string_view name);
AdversaryModel adversary_model(LinkageFunction f);

/// Which (sample, key) slots are compared.
///
/// Mated, DistinctSamples: per subject, every sample pair i < j with every key
///   pair k < l, reference (i, k) against probe (j, l):
///   subjects * C(samples, 2) * C(K, 2).
/// Mated, AllSlots: per subject, every unordered pair of (sample, key) slots
///   whose keys differ: subjects * (C(samples*K, 2) - K*C(samples, 2)).
/// NonMated, FirstSample: every subject pair a < b with every key pair k < l,
///   first sample of a under k against first sample of b under l:
///   C(subjects, 2) * C(K, 2).
/// NonMated, AllPairs: every subject pair a < b, every sample of each, every
///   ordered key pair k != l: C(subjects, 2) * samples^2 * K(K-1).
struct PairingRule {
  enum class Mated { DistinctSamples, AllSlots };
  enum class NonMated { FirstSample, AllPairs };
  Mated mated = Mated::DistinctSamples;
  NonMated non_mated = NonMated::FirstSample;
};

struct PairCounts {
  std::size_t mated = 0;
  std::size_t non_mated = 0;
};

PairCounts expected_pair_counts(std::size_t subjects, std::size_t samples,
                                std::size_t keys, const PairingRule& rule);

/// Everything a linkage function may consult besides the two templates.
struct LinkageContext {
  const KeyRing* keys = nullptr;
  bool experimental = false;
};

/// Throws SchemeNotInvertible / InvalidConfig when `f` cannot run on
/// templates of `scheme`.
void check_supported(LinkageFunction f, Scheme scheme, bool experimental);

double link(LinkageFunction f, const ProtectedTemplate& a, const ProtectedTemplate& b,
            const LinkageContext& ctx);

/// Mated and non-mated linkage scores across K protected databases of one
/// corpus, paired according to `rule`.
ScoreSet cross_database_scores(std::span<const ProtectedDatabase> databases,
                               LinkageFunction f, const LinkageContext& ctx,
                               const PairingRule& rule = {});

/// Single-key (accuracy) scores within one database: sample pairs i < j of
/// each subject as mated, first samples of subject pairs a < b as non-mated.
ScoreSet same_key_scores(const ProtectedDatabase& database, LinkageFunction f,
                         const LinkageContext& ctx);

/// Worker count from UNLINK_EVAL_THREADS, else the hardware concurrency.
std::size_t worker_threads();

/// A corpus protected under every key of a ring.
struct Testbed {
  Corpus corpus;
  KeyRing keys;
  std::vector<ProtectedDatabase> databases;
};

Testbed build_testbed(const CorpusConfig& corpus, const SchemeConfig& scheme,
                      std::size_t keys);

/// Linkage scores supplied as files instead of a synthetic corpus.
struct ExternalScores {
  std::string id;
  AdversaryModel model = AdversaryModel::TemplateOnly;
  std::filesystem::path mated;
  std::filesystem::path non_mated;
  std::optional<std::filesystem::path> accuracy_mated;
  std::optional<std::filesystem::path> accuracy_non_mated;
};

inline constexpr std::size_t kRecommendedKeys = 6;  // more than five keys

struct ProtocolConfig {
  std::size_t keys = 10;
  std::vector<LinkageFunction> functions;
  std::vector<ExternalScores> score_files;
  PriorConfig prior;
  DensityConfig density;
  CorpusConfig corpus;
  SchemeConfig scheme;
  PairingRule pairing;
  Orientation orientation = Orientation::Dissimilarity;
  bool experimental = false;
  std::filesystem::path output_dir;
  bool write_plots = true;
  bool write_scores = true;
  std::string description;
};

/// Throws InvalidConfig on hard errors; returns warnings otherwise.
std::vector<std::string> validate(const ProtocolConfig& cfg);

/// Parses the JSON form of ProtocolConfig (see README for the schema).
ProtocolConfig protocol_config_from_json(const nlohmann::json& j);
ProtocolConfig load_protocol_config(const std::filesystem::path& path);

struct FunctionResult {
  std::string id;
  AdversaryModel model = AdversaryModel::TemplateOnly;
  std::optional<std::string> error;
  std::size_t n_mated = 0;
  std::size_t n_non_mated = 0;
  LinkabilityProfile profile;
  DensityPair densities;
  KlResult kl;
  std::optional<DetCurve> accuracy;
  DetCurve cross_key;
  std::optional<DetCurve> rtmr;
};

inline constexpr int kReportSchemaVersion = 1;

struct EvaluationReport {
  std::vector<FunctionResult> per_function;
  double aggregated_d_sys = 0.0;
  std::string most_linkable;  // id of the maximizing function
  std::vector<std::string> warnings;
  nlohmann::json metadata;
};

/// Maximum d_sys over the functions that succeeded; 0 when none did.
double aggregate_max(std::span<const FunctionResult> results);

/// Density estimate, profile and baseline metrics for one function's scores.
/// `single_key` enables the accuracy DET and RTMR curves.
FunctionResult evaluate_function(std::string id, AdversaryModel model,
                                 const ScoreSet& cross_key,
                                 const std::optional<ScoreSet>& single_key,
                                 const ProtocolConfig& cfg);

/// Runs every protocol step; a failing function is recorded in its entry and
/// does not stop the others. Writes report.json and, when enabled, per
/// function score files and `<function>_linkability.svg` to cfg.output_dir.
EvaluationReport run_protocol(const ProtocolConfig& cfg);

}  // namespace unlinkeval

#endif  // UNLINK_PROTOCOL_HPP
