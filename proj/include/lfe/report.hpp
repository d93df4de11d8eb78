// include/lfe/report.hpp

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

#ifndef LFE_REPORT_HPP_
#define LFE_REPORT_HPP_

#include <set>
#include <string>

#include "lfe/pipeline.hpp"

namespace lfe {

// Renderers, exposed so output can be checked without touching the disk.
// All of them are deterministic functions of the report (no timestamps
// except in the provenance manifest).
std::string render_csv(const LfeReport& report);
std::string render_markdown(const LfeReport& report);
std::string render_abx_svg(const LfeReport& report);
// Empty string when the report carries no family contrast.
std::string render_family_svg(const LfeReport& report);
std::string render_provenance(const LfeReport& report);

// Writes the selected formats under output_dir: "csv" -> report.csv,
// "markdown" -> report.md, "svg" -> fig_abx.svg and (when the contrast
// exists) fig_family.svg.  Any non-empty selection also writes
// provenance.json.  An empty selection writes nothing and succeeds.
// Returns a human-readable list of the files written, one per line,
// including a notice for a skipped family figure.
std::string emit_report(const LfeReport& report,
                        const std::set<std::string>& formats,
                        const std::filesystem::path& output_dir);

}  // namespace lfe

#endif  // LFE_REPORT_HPP_
