// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_REPORT_HPP
#define BPVAE_REPORT_HPP

#include <string>
#include <vector>

#include "bpvae/experiments.hpp"

namespace bpvae {

/// Locale-independent fixed-point rendering, the basis of byte-identical
/// report files.
std::string format_fixed(double v, int decimals);

void write_sweep_csv(const std::string& path, const SweepReport& report);
/// Table-1-style markdown: Noisy first, gamma rows ascending, Oracle last;
/// cells are "mean(±ci)"; PESQ renders "n/a" when no adapter is configured.
void write_table_markdown(const std::string& path, const SweepReport& report);
/// Fig.-3-style SVG: gamma on a log axis (inf as the rightmost category)
/// against mean validation KL, one polyline per head.
void write_kl_svg(const std::string& path, const SweepReport& report);
void write_aggregate_json(const std::string& path, const SweepReport& report);

/// sweep.csv + table.md + kl_divergence.svg + aggregate.json in out_dir.
void emit_report(const SweepReport& report, const std::string& out_dir);

void write_eval_csv(const std::string& path,
                    const std::vector<EvalRecord>& records);
void write_eval_aggregate_json(const std::string& path,
                               const std::vector<EvalRecord>& records);

}  // namespace bpvae

#endif  // BPVAE_REPORT_HPP
