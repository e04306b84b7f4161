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

#include "unlink/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace unlinkeval {

using nlohmann::json;

namespace {

json array_json(const Eigen::ArrayXd& a) {
  json out = json::array();
  for (Eigen::Index i = 0; i < a.size(); ++i) out.push_back(a[i]);
  return out;
}

Eigen::ArrayXd array_from_json(const json& j) {
  Eigen::ArrayXd a(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& v = j[i];
    if (v.is_null()) {
      a[static_cast<Eigen::Index>(i)] = no_evidence();
    } else if (v.is_string()) {
      if (v.get<std::string>() != "inf") {
        throw Error(ErrorCode::ParseError, "unexpected string in numeric array");
      }
      a[static_cast<Eigen::Index>(i)] = std::numeric_limits<double>::infinity();
    } else {
      a[static_cast<Eigen::Index>(i)] = v.get<double>();
    }
  }
  return a;
}

json lr_json(const Eigen::ArrayXd& lr) {
  json out = json::array();
  for (Eigen::Index i = 0; i < lr.size(); ++i) {
    if (is_no_evidence(lr[i])) {
      out.push_back(nullptr);
    } else if (std::isinf(lr[i])) {
      out.push_back("inf");
    } else {
      out.push_back(lr[i]);
    }
  }
  return out;
}

}  // namespace

json to_json(const DensityPair& dp) {
  return {{"edges", array_json(dp.edges)},
          {"p_mated", array_json(dp.p_mated)},
          {"p_non_mated", array_json(dp.p_non_mated)},
          {"bin_width", array_json(dp.bin_width)},
          {"weight_mated", array_json(dp.weight_mated)},
          {"weight_non_mated", array_json(dp.weight_non_mated)}};
}

DensityPair density_pair_from_json(const json& j) {
  DensityPair dp;
  dp.edges = array_from_json(j.at("edges"));
  dp.p_mated = array_from_json(j.at("p_mated"));
  dp.p_non_mated = array_from_json(j.at("p_non_mated"));
  const Eigen::Index bins = dp.p_mated.size();
  dp.bin_width = j.contains("bin_width")
                     ? array_from_json(j.at("bin_width"))
                     : Eigen::ArrayXd(dp.edges.tail(bins) - dp.edges.head(bins));
  dp.weight_mated = j.contains("weight_mated") ? array_from_json(j.at("weight_mated"))
                                               : Eigen::ArrayXd(dp.p_mated * dp.bin_width);
  dp.weight_non_mated = j.contains("weight_non_mated")
                            ? array_from_json(j.at("weight_non_mated"))
                            : Eigen::ArrayXd(dp.p_non_mated * dp.bin_width);
  check_density_pair(dp);
  return dp;
}

json to_json(const LinkabilityProfile& p) {
  return {{"omega", p.omega},
          {"d_sys", p.d_sys},
          {"edges", array_json(p.edges)},
          {"lr", lr_json(p.lr)},
          {"d_local", array_json(p.d_local)},
          {"boundary_scores", p.boundary_scores},
          {"warnings", p.warnings}};
}

LinkabilityProfile profile_from_json(const json& j) {
  LinkabilityProfile p;
  p.omega = j.at("omega").get<double>();
  p.d_sys = j.at("d_sys").get<double>();
  p.edges = array_from_json(j.at("edges"));
  p.lr = array_from_json(j.at("lr"));
  p.d_local = array_from_json(j.at("d_local"));
  p.boundary_scores = j.at("boundary_scores").get<std::vector<double>>();
  if (j.contains("warnings")) p.warnings = j.at("warnings").get<std::vector<std::string>>();
  return p;
}

json to_json(const DetCurve& c) {
  return {{"mode", to_string(c.mode)},
          {"orientation", to_string(c.orientation)},
          {"eer", c.eer},
          {"eer_threshold", c.eer_threshold},
          {"thresholds", c.thresholds},
          {c.mode == CurveMode::Renewable ? "rtmr" : "fmr", c.fmr},
          {"fnmr", c.fnmr}};
}

json kl_to_json(const KlResult& kl) {
  if (!kl) return "undefined";
  return *kl;
}

json to_json(const FunctionResult& r) {
  json j = {{"id", r.id}, {"adversary_model", to_string(r.model)}};
  if (r.error) {
    j["error"] = *r.error;
    return j;
  }
  j["n_mated"] = r.n_mated;
  j["n_non_mated"] = r.n_non_mated;
  j["d_sys"] = r.profile.d_sys;
  j["linkability"] = to_json(r.profile);
  j["densities"] = to_json(r.densities);
  j["kl_divergence"] = kl_to_json(r.kl);
  j["det_cross_key"] = to_json(r.cross_key);
  j["det_accuracy"] = r.accuracy ? to_json(*r.accuracy) : json(nullptr);
  j["rtmr"] = r.rtmr ? to_json(*r.rtmr) : json(nullptr);
  return j;
}

json to_json(const EvaluationReport& report) {
  json functions = json::array();
  for (const auto& r : report.per_function) functions.push_back(to_json(r));
  return {{"schema_version", kReportSchemaVersion},
          {"aggregation", "max"},
          {"aggregated_d_sys", report.aggregated_d_sys},
          {"most_linkable", report.most_linkable},
          {"functions", functions},
          {"warnings", report.warnings},
          {"metadata", report.metadata}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_curve_csv(const std::filesystem::path& path, const DetCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << "threshold," << (curve.mode == CurveMode::Renewable ? "rtmr" : "fmr") << ",fnmr\n";
  for (std::size_t i = 0; i < curve.fmr.size(); ++i) {
    out << format_score(curve.thresholds[i]) << ',' << format_score(curve.fmr[i]) << ','
        << format_score(curve.fnmr[i]) << '\n';
  }
}

std::string format_d_sys(double d_sys) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", d_sys);
  return buf;
}

std::string comparison_table(const ComparisonSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-28s %s\n"
                "%-28s %.4f\n"
                "%-28s %.4f\n"
                "%-28s %.4f\n"
                "%-28s %s\n"
                "%-28s %s\n",
                "metric", "value",
                "EER accuracy (single key)", s.eer_accuracy,
                "EER cross-key (CMR/FCMR)", s.eer_cross_key,
                "RTMR equal-rate point", s.rtmr_equal_rate,
                "KL(mated || non-mated)", format_kl(s.kl, 4).c_str(),
                "D_sys", format_d_sys(s.d_sys).c_str());
  return buf;
}

std::string report_text(const EvaluationReport& report) {
  std::ostringstream out;
  for (const auto& r : report.per_function) {
    out << r.id << " [" << to_string(r.model) << "]: ";
    if (r.error) {
      out << "failed: " << *r.error << '\n';
      continue;
    }
    out << "D_sys = " << format_d_sys(r.profile.d_sys) << ", KL = "
        << format_kl(r.kl, 4) << ", cross-key EER = " << format_d_sys(r.cross_key.eer)
        << " (" << r.n_mated << " mated / " << r.n_non_mated << " non-mated)\n";
  }
  out << "D_sys = " << format_d_sys(report.aggregated_d_sys) << " (max over functions";
  if (!report.most_linkable.empty()) out << ", attained by " << report.most_linkable;
  out << ")\n";
  return out.str();
}

}  // namespace unlinkeval
