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

#include "unlink/commands.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <optional>
#include <string>

#include "unlink/baselines.hpp"
#include "unlink/linkability.hpp"
#include "unlink/plot.hpp"
#include "unlink/protocol.hpp"
#include "unlink/report.hpp"

namespace unlinkeval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flag errors carry the flag name in front of the library message.
[[noreturn]] void flag_error(const std::string& flag, const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, flag + ": " + msg);
}

struct PriorFlags {
  std::optional<double> omega;
  std::optional<long> subjects;

  PriorConfig resolve() const {
    if (omega) {
      if (!(*omega > 0.0)) flag_error("--omega", "omega must be positive");
      return PriorConfig::explicit_omega(*omega);
    }
    if (subjects) {
      try {
        return PriorConfig::from_enrollment(*subjects);
      } catch (const Error& e) {
        flag_error("--subjects", e.what());
      }
    }
    return PriorConfig::worst_case();
  }
};

void add_prior_flags(CLI::App* cmd, PriorFlags& p) {
  auto* omega = cmd->add_option("--omega", p.omega, "prior ratio p(Hm)/p(Hnm)");
  auto* subjects =
      cmd->add_option("--subjects", p.subjects, "enrolled subjects N, gives omega = 1/(N-1)");
  omega->excludes(subjects);
}

struct DensityFlags {
  std::string bins = "auto";
  bool kde = false;

  DensityConfig resolve() const {
    DensityConfig cfg;
    cfg.kde = kde;
    if (bins != "auto") {
      std::size_t n = 0;
      const auto [end, ec] = std::from_chars(bins.data(), bins.data() + bins.size(), n);
      if (ec != std::errc() || end != bins.data() + bins.size() || n < 2) {
        flag_error("--bins", "expected an integer >= 2 or 'auto', got '" + bins + "'");
      }
      cfg.bins = n;
    }
    return cfg;
  }
};

void add_density_flags(CLI::App* cmd, DensityFlags& d) {
  cmd->add_option("--bins", d.bins, "interior histogram bins, or auto");
  cmd->add_flag("--kde", d.kde, "Gaussian kernel density instead of a histogram");
}

Orientation parse_orientation(const std::string& s) {
  if (s == "similarity") return Orientation::Similarity;
  if (s == "dissimilarity") return Orientation::Dissimilarity;
  flag_error("--orientation", "expected similarity or dissimilarity, got '" + s + "'");
}

json baselines_json(const KlResult& kl, const DetCurve& det) {
  return {{"kl", kl_to_json(kl)},
          {"eer", det.eer},
          {"eer_threshold", det.eer_threshold},
          {"det", to_json(thin_curve(det, 1000))}};
}

KlResult kl_of(const DensityPair& dp) {
  const Eigen::ArrayXd pm = dp.mass_mated();
  const Eigen::ArrayXd pn = dp.mass_non_mated();
  return kl_divergence(std::span(pm.data(), static_cast<std::size_t>(pm.size())),
                       std::span(pn.data(), static_cast<std::size_t>(pn.size())));
}

std::string plot_title(const std::string& what, const LinkabilityProfile& p) {
  return what + ": D_sys = " + format_d_sys(p.d_sys) + " (omega = " + format_score(p.omega) +
         ")";
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// --- eval ------------------------------------------------------------------------

struct EvalArgs {
  std::string mated, non_mated, labeled;
  PriorFlags prior;
  DensityFlags density;
  std::string orientation = "dissimilarity";
  std::string out = ".";
  bool plot = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (a.labeled.empty() && (a.mated.empty() || a.non_mated.empty())) {
    flag_error("--mated/--nonmated", "both score files are required (or --scores)");
  }
  const auto prior = a.prior.resolve();
  const auto density = a.density.resolve();
  const auto orientation = parse_orientation(a.orientation);
  const ScoreSet scores =
      a.labeled.empty() ? load_score_set(a.mated, a.non_mated) : load_labeled_scores(a.labeled);

  DensityPair dp;
  const auto profile = evaluate(scores, prior, density, dp);
  const auto det = det_curve(scores.mated(), scores.non_mated(), orientation, CurveMode::CrossKey);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  json lj = to_json(profile);
  lj["densities"] = to_json(dp);
  lj["n_mated"] = scores.mated().size();
  lj["n_non_mated"] = scores.non_mated().size();
  lj["prior"] = {{"omega", prior.omega},
                 {"derivation", to_string(prior.derivation)},
                 {"enrollment_count", prior.enrollment_count}};
  write_json(dir / "linkability.json", lj);
  write_json(dir / "baselines.json", baselines_json(kl_of(dp), det));
  if (a.plot) {
    write_text(dir / "linkability.svg",
               render_linkability_svg({dp, profile, plot_title("linkability", profile)}));
  }
  print_warnings(profile.warnings, err);
  out << "D_sys = " << format_d_sys(profile.d_sys) << '\n';
  return kExitOk;
}

// --- synth -----------------------------------------------------------------------

struct SynthArgs {
  std::string scheme = "xor";
  std::string function = "pic_hd";
  CorpusConfig corpus;
  SchemeConfig scheme_cfg;
  std::size_t keys = 10;
  bool experimental = false;
  bool all_slots = false;
  bool all_pairs = false;
  std::string out;
};

int cmd_synth(SynthArgs a, std::ostream& out, std::ostream& err) {
  a.scheme_cfg.scheme = parse_scheme(a.scheme);
  const auto f = parse_linkage_function(a.function);
  check_supported(f, a.scheme_cfg.scheme, a.experimental);
  if (a.keys < 2) flag_error("--keys", "K must be at least 2");
  if (a.keys < kRecommendedKeys) {
    err << "warning: K = " << a.keys << " keys; more than 5 are recommended\n";
  }
  validate(a.corpus);
  PairingRule rule;
  if (a.all_slots) rule.mated = PairingRule::Mated::AllSlots;
  if (a.all_pairs) rule.non_mated = PairingRule::NonMated::AllPairs;

  const auto tb = build_testbed(a.corpus, a.scheme_cfg, a.keys);
  const LinkageContext ctx{&tb.keys, a.experimental};
  const auto cross = cross_database_scores(tb.databases, f, ctx, rule);
  const auto single = same_key_scores(tb.databases.front(), f, ctx);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_score_column(dir / "mated.csv", cross.mated());
  write_score_column(dir / "nonmated.csv", cross.non_mated());
  write_score_column(dir / "accuracy_mated.csv", single.mated());
  write_score_column(dir / "accuracy_nonmated.csv", single.non_mated());
  const auto& c = a.corpus;
  json manifest = {
      {"scheme", to_string(a.scheme_cfg.scheme)},
      {"function", to_string(f)},
      {"adversary_model", to_string(adversary_model(f))},
      {"keys", a.keys},
      {"subjects", c.n_subjects},
      {"samples", c.samples_per_subject},
      {"bits", c.template_bits},
      {"flip_rate", c.intra_flip_rate},
      {"outlier_rate", c.outlier_rate},
      {"seed", c.seed},
      {"remap_block_bits", a.scheme_cfg.remap_block_bits},
      {"leak_swaps", a.scheme_cfg.remap_leak_swaps},
      {"experimental", a.experimental},
      {"pairing",
       {{"mated", a.all_slots ? "all_slots" : "distinct_samples"},
        {"non_mated", a.all_pairs ? "all_pairs" : "first_sample"}}},
      {"counts", {{"mated", cross.mated().size()}, {"non_mated", cross.non_mated().size()}}},
      {"files",
       {{"mated", "mated.csv"},
        {"nonmated", "nonmated.csv"},
        {"accuracy_mated", "accuracy_mated.csv"},
        {"accuracy_nonmated", "accuracy_nonmated.csv"}}}};
  write_json(dir / "manifest.json", manifest);
  out << "wrote " << cross.mated().size() << " mated and " << cross.non_mated().size()
      << " non-mated cross-key scores to " << dir.string() << '\n';
  return kExitOk;
}

// --- compare ---------------------------------------------------------------------

struct CompareArgs {
  std::string acc_mated, acc_non_mated, cross_mated, cross_non_mated;
  PriorFlags prior;
  DensityFlags density;
  std::string orientation = "dissimilarity";
  std::string out = ".";
};

int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
  const auto prior = a.prior.resolve();
  const auto density = a.density.resolve();
  const auto orientation = parse_orientation(a.orientation);
  const auto single = load_score_set(a.acc_mated, a.acc_non_mated);
  const auto cross = load_score_set(a.cross_mated, a.cross_non_mated);

  DensityPair dp;
  const auto profile = evaluate(cross, prior, density, dp);
  const auto [accuracy, cross_key] = cross_key_det(single, cross, orientation);
  const auto rtmr = rtmr_curve(single.mated(), cross.non_mated(), orientation);
  const ComparisonSummary summary{accuracy.eer, cross_key.eer, rtmr.eer, kl_of(dp),
                                  profile.d_sys};

  const fs::path dir(a.out);
  fs::create_directories(dir);
  json j = {{"eer_accuracy", summary.eer_accuracy},
            {"eer_cross_key", summary.eer_cross_key},
            {"eer_increase", summary.eer_cross_key - summary.eer_accuracy},
            {"rtmr_equal_rate", summary.rtmr_equal_rate},
            {"kl", kl_to_json(summary.kl)},
            {"d_sys", summary.d_sys},
            {"profile", to_json(profile)},
            {"densities", to_json(dp)},
            {"accuracy", to_json(thin_curve(accuracy, 1000))},
            {"cross_key", to_json(thin_curve(cross_key, 1000))},
            {"rtmr", to_json(thin_curve(rtmr, 1000))}};
  write_json(dir / "compare.json", j);
  write_text(dir / "det.svg",
             render_det_svg({{&accuracy, "accuracy (same key)", "#1f77b4", false},
                             {&cross_key, "cross-key", "#d62728", true}},
                            "DET: accuracy vs cross-key", "FMR / FCMR", "FNMR / FNCMR"));
  write_text(dir / "rtmr.svg",
             render_det_svg({{&rtmr, "renewable", "#2ca02c", false}}, "Renewable templates",
                            "RTMR", "FNMR"));
  write_text(dir / "linkability.svg",
             render_linkability_svg({dp, profile, plot_title("cross-key linkability", profile)}));
  print_warnings(profile.warnings, err);
  out << comparison_table(summary);
  return kExitOk;
}

// --- protocol --------------------------------------------------------------------

struct ProtocolArgs {
  std::string config;
  std::string out;
};

int cmd_protocol(const ProtocolArgs& a, std::ostream& out, std::ostream& err) {
  auto cfg = load_protocol_config(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (cfg.output_dir.empty()) cfg.output_dir = fs::path(a.config).parent_path() / "report";
  const auto report = run_protocol(cfg);
  print_warnings(report.warnings, err);
  for (const auto& r : report.per_function) {
    if (r.error) err << "error: " << r.id << ": " << *r.error << '\n';
  }
  out << report_text(report);
  out << "report: " << (cfg.output_dir / "report.json").string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unlinkability evaluation of protected biometric templates", "unlink_eval"};
  app.require_subcommand(1);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "local and global linkability of a score set");
  eval->add_option("--mated", ev.mated, "mated score CSV (one score per line)");
  eval->add_option("--nonmated", ev.non_mated, "non-mated score CSV");
  eval->add_option("--scores", ev.labeled, "labeled CSV with header score,label")
      ->excludes("--mated")
      ->excludes("--nonmated");
  add_prior_flags(eval, ev.prior);
  add_density_flags(eval, ev.density);
  eval->add_option("--orientation", ev.orientation, "similarity or dissimilarity (default)");
  eval->add_option("--out", ev.out, "output directory");
  eval->add_flag("--plot", ev.plot, "write linkability.svg");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "synthetic cross-key score files");
  synth->add_option("--scheme", sy.scheme, "xor, bloom, remap or none");
  synth->add_option("--function", sy.function,
                    "pic_hd, hamming_weight, permuted_xor or reconstruction");
  synth->add_option("--subjects", sy.corpus.n_subjects);
  synth->add_option("--samples", sy.corpus.samples_per_subject);
  synth->add_option("--bits", sy.corpus.template_bits);
  synth->add_option("--flip", sy.corpus.intra_flip_rate, "intra-subject bit flip rate");
  synth->add_option("--outlier-rate", sy.corpus.outlier_rate);
  synth->add_option("--seed", sy.corpus.seed);
  synth->add_option("--keys", sy.keys, "number of keys / databases K");
  synth->add_option("--remap-block-bits", sy.scheme_cfg.remap_block_bits);
  synth->add_option("--leak-swaps", sy.scheme_cfg.remap_leak_swaps,
                    "remap keys derived from one master permutation with this many swaps");
  synth->add_option("--bloom-width", sy.scheme_cfg.bloom_block_width);
  synth->add_option("--bloom-height", sy.scheme_cfg.bloom_block_height);
  synth->add_flag("--experimental", sy.experimental, "allow the approximate Bloom decoder");
  synth->add_flag("--all-slots", sy.all_slots, "mated pairs over all (sample, key) slots");
  synth->add_flag("--all-pairs", sy.all_pairs, "non-mated pairs over all samples");
  synth->add_option("--out", sy.out, "output directory")->required();

  CompareArgs cm;
  auto* compare = app.add_subcommand("compare", "EER, RTMR and KL next to D_sys");
  compare->add_option("--accuracy-mated", cm.acc_mated)->required();
  compare->add_option("--accuracy-nonmated", cm.acc_non_mated)->required();
  compare->add_option("--crosskey-mated", cm.cross_mated)->required();
  compare->add_option("--crosskey-nonmated", cm.cross_non_mated)->required();
  add_prior_flags(compare, cm.prior);
  add_density_flags(compare, cm.density);
  compare->add_option("--orientation", cm.orientation);
  compare->add_option("--out", cm.out, "output directory");

  ProtocolArgs pr;
  auto* protocol = app.add_subcommand("protocol", "full evaluation from a JSON config");
  protocol->add_option("config", pr.config, "config file")->required();
  protocol->add_option("--out", pr.out, "output directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (*eval) return cmd_eval(ev, out, err);
    if (*synth) return cmd_synth(sy, out, err);
    if (*compare) return cmd_compare(cm, out, err);
    if (*protocol) return cmd_protocol(pr, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvariantViolation ? kExitInternal : kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitValidation;
}

}  // namespace unlinkeval
