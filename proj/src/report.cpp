// src/report.cpp

// Copyright 2026  LFE-Kit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "lfe/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <json.hpp>

#include "lfe/io.hpp"

namespace lfe {

namespace {

std::string fmt(double v, int decimals) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// Languages in first-appearance order across the pair rows.
std::vector<std::string> language_order(const LfeReport& report) {
  std::vector<std::string> order;
  auto add = [&](const std::string& name) {
    if (std::find(order.begin(), order.end(), name) == order.end())
      order.push_back(name);
  };
  for (const auto& pr : report.pairs) {
    add(pr.language_a);
    add(pr.language_b);
  }
  return order;
}

const PairResult* find_pair(const LfeReport& report, const std::string& a,
                            const std::string& b) {
  for (const auto& pr : report.pairs) {
    if ((pr.language_a == a && pr.language_b == b) ||
        (pr.language_a == b && pr.language_b == a))
      return &pr;
  }
  return nullptr;
}

// Tick step covering [0, hi] in about five steps, snapped to 1/2/5 decades.
double nice_step(double hi) {
  const double raw = hi / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

struct Bar {
  std::string label;
  double value;
  double whisker;  // half-length; 0 for none
  const char* fill;
};

// Minimal grouped bar chart; value axis from 0 (or the most negative bar).
std::string bar_chart(const std::string& title, const std::string& y_label,
                      const std::vector<Bar>& bars,
                      const std::string& annotation,
                      const std::string& caption) {
  const double width = 460, height = 330;
  const double left = 64, right = 430, top = 48, bottom = 250;

  double hi = 0.0, lo = 0.0;
  for (const auto& b : bars) {
    hi = std::max(hi, b.value + b.whisker);
    lo = std::min(lo, b.value - b.whisker);
  }
  if (hi <= 0.0) hi = 1.0;
  hi *= 1.2;
  if (lo < 0.0) lo *= 1.2;
  const double step = nice_step(hi - lo);

  auto y_of = [&](double v) {
    return bottom - (v - lo) / (hi - lo) * (bottom - top);
  };

  std::string s;
  s += strcat("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 ",
              width, " ", height,
              "\" font-family=\"sans-serif\" font-size=\"13\">\n");
  s += strcat("<rect x=\"0\" y=\"0\" width=\"", width, "\" height=\"", height,
              "\" fill=\"#ffffff\"/>\n");
  s += strcat("<text x=\"", width / 2,
              "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">",
              xml_escape(title), "</text>\n");

  // Axis, ticks, zero line.
  s += strcat("<line x1=\"", left, "\" y1=\"", top, "\" x2=\"", left,
              "\" y2=\"", bottom, "\" stroke=\"#333333\"/>\n");
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9; v += step) {
    const double y = y_of(v);
    s += strcat("<line x1=\"", left - 4, "\" y1=\"", fmt(y, 1), "\" x2=\"",
                left, "\" y2=\"", fmt(y, 1), "\" stroke=\"#333333\"/>\n");
    s += strcat("<text x=\"", left - 8, "\" y=\"", fmt(y + 4, 1),
                "\" text-anchor=\"end\">", fmt(v, step < 1.0 ? 1 : 0),
                "</text>\n");
  }
  s += strcat("<line x1=\"", left, "\" y1=\"", fmt(y_of(0.0), 1), "\" x2=\"",
              right, "\" y2=\"", fmt(y_of(0.0), 1),
              "\" stroke=\"#333333\"/>\n");
  s += strcat("<text x=\"16\" y=\"", (top + bottom) / 2,
              "\" text-anchor=\"middle\" transform=\"rotate(-90 16 ",
              (top + bottom) / 2, ")\">", xml_escape(y_label), "</text>\n");

  const double slot = (right - left) / static_cast<double>(bars.size());
  const double bar_w = slot * 0.5;
  double bracket_top = top;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    const double y0 = y_of(std::max(0.0, b.value));
    const double h = std::abs(y_of(b.value) - y_of(0.0));
    s += strcat("<rect x=\"", fmt(cx - bar_w / 2, 1), "\" y=\"", fmt(y0, 1),
                "\" width=\"", fmt(bar_w, 1), "\" height=\"", fmt(h, 1),
                "\" fill=\"", b.fill, "\"/>\n");
    if (b.whisker > 0.0) {
      const double yl = y_of(b.value - b.whisker);
      const double yh = y_of(b.value + b.whisker);
      s += strcat("<line x1=\"", fmt(cx, 1), "\" y1=\"", fmt(yl, 1),
                  "\" x2=\"", fmt(cx, 1), "\" y2=\"", fmt(yh, 1),
                  "\" stroke=\"#333333\"/>\n");
      for (double yy : {yl, yh})
        s += strcat("<line x1=\"", fmt(cx - 8, 1), "\" y1=\"", fmt(yy, 1),
                    "\" x2=\"", fmt(cx + 8, 1), "\" y2=\"", fmt(yy, 1),
                    "\" stroke=\"#333333\"/>\n");
      bracket_top = std::min(bracket_top, yh);
    }
    const double label_y = y_of(std::max(0.0, b.value + b.whisker)) - 6;
    s += strcat("<text x=\"", fmt(cx, 1), "\" y=\"", fmt(label_y, 1),
                "\" text-anchor=\"middle\">", fmt(b.value, 2), "</text>\n");
    s += strcat("<text x=\"", fmt(cx, 1), "\" y=\"", bottom + 18,
                "\" text-anchor=\"middle\">", xml_escape(b.label),
                "</text>\n");
  }

  if (!annotation.empty() && bars.size() >= 2) {
    const double x1 = left + slot * 0.5;
    const double x2 = left + slot * (static_cast<double>(bars.size()) - 0.5);
    const double y = top - 6;
    s += strcat("<line x1=\"", fmt(x1, 1), "\" y1=\"", fmt(y + 6, 1),
                "\" x2=\"", fmt(x2, 1), "\" y2=\"", fmt(y + 6, 1),
                "\" stroke=\"#333333\"/>\n");
    s += strcat("<text x=\"", fmt((x1 + x2) / 2, 1), "\" y=\"", fmt(y, 1),
                "\" text-anchor=\"middle\">", xml_escape(annotation),
                "</text>\n");
  }
  if (!caption.empty())
    s += strcat("<text x=\"", width / 2, "\" y=\"", bottom + 44,
                "\" text-anchor=\"middle\" font-size=\"12\">",
                xml_escape(caption), "</text>\n");
  s += "</svg>\n";
  return s;
}

void check_report(const LfeReport& report) {
  if (report.pairs.empty())
    raise(ErrorCode::kInvalidSpec, "report has no language pairs");
}

}  // namespace

std::string render_csv(const LfeReport& report) {
  check_report(report);
  std::string s =
      "language_a,language_b,e_aa,e_bb,e_ab,e_ba,s_same,s_diff,"
      "lfe_percent,p_value,significant,stars\n";
  for (const auto& pr : report.pairs) {
    s += strcat(csv_field(pr.language_a), ",", csv_field(pr.language_b), ",",
                fmt(pr.aa.error_rate, 6), ",", fmt(pr.bb.error_rate, 6), ",",
                fmt(pr.ab.error_rate, 6), ",", fmt(pr.ba.error_rate, 6), ",",
                fmt(pr.score.s_same, 6), ",", fmt(pr.score.s_diff, 6), ",",
                fmt(pr.score.lfe_percent, 4), ",", fmt(pr.score.p_value, 6),
                ",", pr.score.significant ? "true" : "false", ",",
                pr.score.stars, "\n");
  }
  return s;
}

std::string render_markdown(const LfeReport& report) {
  check_report(report);
  const auto languages = language_order(report);
  const std::size_t n = languages.size();

  std::string s = "# Language familiarity effect\n\n";
  s += strcat("Toolkit ", report.toolkit_version, ", config ",
              report.config_digest, ".\n\n");

  s += "## LFE scores (%)\n\n";
  s += "| |";
  for (std::size_t j = 0; j + 1 < n; ++j)
    s += strcat(" ", languages[j], " |");
  s += "\n|---|";
  for (std::size_t j = 0; j + 1 < n; ++j) s += "---|";
  s += "\n";
  for (std::size_t i = 1; i < n; ++i) {
    s += strcat("| **", languages[i], "** |");
    for (std::size_t j = 0; j + 1 < n; ++j) {
      if (j >= i) {
        s += " |";
        continue;
      }
      const PairResult* pr = find_pair(report, languages[j], languages[i]);
      s += pr ? strcat(" ", fmt(pr->score.lfe_percent, 2), pr->score.stars,
                       " |")
              : " |";
    }
    s += "\n";
  }
  const char* pair_word = report.pairs.size() == 1 ? " pair" : " pairs";
  s += strcat(
      "\nRelative increase (%) of the ABX speaker-discrimination error when "
      "the training language is mismatched; `*` and `**` mark "
      "Bonferroni-corrected significance at 0.05 and 0.005 across the ",
      report.pairs.size(), pair_word, ".\n\n");

  s += "## Condition detail\n\n";
  s += "| pair | e_aa | e_bb | e_ab | e_ba | s_same | s_diff | LFE % | p |\n";
  s += "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& pr : report.pairs) {
    s += strcat("| ", pr.language_a, "/", pr.language_b, " | ",
                fmt(pr.aa.error_rate, 4), " | ", fmt(pr.bb.error_rate, 4),
                " | ", fmt(pr.ab.error_rate, 4), " | ",
                fmt(pr.ba.error_rate, 4), " | ", fmt(pr.score.s_same, 4),
                " | ", fmt(pr.score.s_diff, 4), " | ",
                fmt(pr.score.lfe_percent, 2), pr.score.stars, " | ",
                fmt(pr.score.p_value, 5), " |\n");
  }

  s += "\n## Summary\n\n";
  s += strcat("- Mean LFE across ", report.pairs.size(), pair_word, ": ",
              fmt(report.mean_lfe, 2), "% (",
              fmt(report.mean_ci.level * 100, 0), "% bootstrap CI [",
              fmt(report.mean_ci.lo, 2), ", ", fmt(report.mean_ci.hi, 2),
              "], resampling ", report.mean_ci.unit, "s)\n");
  s += strcat("- Mean ABX error, familiar ", fmt(report.familiar_mean_abx, 4),
              " vs unfamiliar ", fmt(report.unfamiliar_mean_abx, 4),
              " (paired permutation p = ", fmt(report.overall_p, 5), ")\n");

  s += "\n## Family contrast\n\n";
  if (report.family) {
    const FamilyContrast& fc = *report.family;
    s += strcat("- Same family: M = ", fmt(fc.same_mean, 2),
                "%, SD = ", fmt(fc.same_sd, 2), ", N = ", fc.same_n, "\n");
    s += strcat("- Different family: M = ", fmt(fc.diff_mean, 2),
                "%, SD = ", fmt(fc.diff_sd, 2), ", N = ", fc.diff_n, "\n");
    s += strcat("- Difference (different - same): ",
                fmt(fc.diff_mean - fc.same_mean, 2), "% (",
                fmt(fc.difference_ci.level * 100, 0), "% bootstrap CI [",
                fmt(fc.difference_ci.lo, 2), ", ", fmt(fc.difference_ci.hi, 2),
                "], resampling ", fc.difference_ci.unit, ")\n");
  } else {
    s += strcat("- ", report.family_notice, "\n");
  }
  return s;
}

std::string render_abx_svg(const LfeReport& report) {
  check_report(report);
  std::vector<Bar> bars = {
      {"familiar", report.familiar_mean_abx * 100.0, 0.0, "#4878a8"},
      {"unfamiliar", report.unfamiliar_mean_abx * 100.0, 0.0, "#a85454"}};
  std::string stars = significance_stars(report.overall_p, 1);
  if (stars.empty()) stars = report.overall_p <= 0.05 ? "*" : "n.s.";
  return bar_chart(
      "ABX error by training-language familiarity", "ABX error (%)", bars,
      stars,
      strcat("mean over ", report.pairs.size(), " pairs, paired permutation p = ",
             fmt(report.overall_p, 5)));
}

std::string render_family_svg(const LfeReport& report) {
  check_report(report);
  if (!report.family) return "";
  const FamilyContrast& fc = *report.family;
  std::vector<Bar> bars = {
      {strcat("same family (N=", fc.same_n, ")"), fc.same_mean, fc.same_sd,
       "#4878a8"},
      {strcat("different family (N=", fc.diff_n, ")"), fc.diff_mean,
       fc.diff_sd, "#a85454"}};
  return bar_chart(
      "LFE by language family", "LFE (%)", bars, "",
      strcat("difference ", fmt(fc.diff_mean - fc.same_mean, 2), "%, ",
             fmt(fc.difference_ci.level * 100, 0), "% CI [",
             fmt(fc.difference_ci.lo, 2), ", ", fmt(fc.difference_ci.hi, 2),
             "]"));
}

std::string render_provenance(const LfeReport& report) {
  nlohmann::ordered_json j;
  j["toolkit_version"] = report.toolkit_version;
  j["config_digest"] = report.config_digest;
  j["started_at"] = report.started_at;
  j["finished_at"] = report.finished_at;
  j["n_pairs"] = report.pairs.size();
  j["artifacts"] = nlohmann::ordered_json::object();
  for (const auto& [name, key] : report.artifacts) j["artifacts"][name] = key;
  return j.dump(2) + "\n";
}

std::string emit_report(const LfeReport& report,
                        const std::set<std::string>& formats,
                        const std::filesystem::path& output_dir) {
  for (const auto& f : formats)
    if (f != "csv" && f != "markdown" && f != "svg")
      raise(ErrorCode::kInvalidSpec, "unknown report format \"", f,
            "\" (expected csv, markdown, svg)");
  if (formats.empty()) return "";
  check_report(report);
  std::filesystem::create_directories(output_dir);

  std::string log;
  auto write = [&](const char* name, const std::string& content) {
    const auto path = output_dir / name;
    atomic_write_file(path, content);
    log += strcat("wrote ", path.string(), "\n");
  };
  if (formats.count("csv")) write("report.csv", render_csv(report));
  if (formats.count("markdown")) write("report.md", render_markdown(report));
  if (formats.count("svg")) {
    write("fig_abx.svg", render_abx_svg(report));
    const std::string family = render_family_svg(report);
    if (family.empty())
      log += strcat(report.family_notice, "; fig_family.svg not written\n");
    else
      write("fig_family.svg", family);
  }
  write("provenance.json", render_provenance(report));
  return log;
}

}  // namespace lfe
