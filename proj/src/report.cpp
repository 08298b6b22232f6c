// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bpvae {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // no newline translation
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

std::string agg_cell(const MetricAggregate& a, int decimals, double scale) {
  if (a.n == 0) return "n/a";
  return format_fixed(scale * a.mean, decimals) + " (±" +
         format_fixed(scale * a.ci95, decimals) + ")";
}

double gamma_sort_key(const std::string& label) {
  if (label == "inf") return std::numeric_limits<double>::infinity();
  return std::stod(label);
}

// Noisy first, gamma rows ascending, Oracle last; failed rows keep their slot.
std::vector<const SweepRow*> presentation_order(const SweepReport& report) {
  std::vector<const SweepRow*> noisy, gammas, oracle;
  for (const auto& row : report.rows) {
    if (row.method == "Noisy") noisy.push_back(&row);
    else if (row.method == "Oracle") oracle.push_back(&row);
    else gammas.push_back(&row);
  }
  std::stable_sort(gammas.begin(), gammas.end(),
                   [](const SweepRow* a, const SweepRow* b) {
                     return gamma_sort_key(a->gamma_label) <
                            gamma_sort_key(b->gamma_label);
                   });
  std::vector<const SweepRow*> out = noisy;
  out.insert(out.end(), gammas.begin(), gammas.end());
  out.insert(out.end(), oracle.begin(), oracle.end());
  return out;
}

json aggregate_json(const MetricAggregate& a) {
  if (a.n == 0) return nullptr;
  return json{{"mean", a.mean}, {"ci95", a.ci95}, {"n", a.n}};
}

}  // namespace

std::string format_fixed(double v, int decimals) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

void write_sweep_csv(const std::string& path, const SweepReport& report) {
  auto os = open_out(path);
  os << "method,gamma,si_sdr_mean,si_sdr_ci95,stoi_mean,stoi_ci95,"
        "pesq_mean,pesq_ci95,kl_speech,kl_noise,params,failed\n";
  for (const SweepRow* row : presentation_order(report)) {
    os << row->method << ',' << row->gamma_label << ',';
    if (row->si_sdr.n > 0)
      os << format_fixed(row->si_sdr.mean, 6) << ','
         << format_fixed(row->si_sdr.ci95, 6) << ',';
    else
      os << ",,";
    if (row->stoi.n > 0)
      os << format_fixed(row->stoi.mean, 6) << ','
         << format_fixed(row->stoi.ci95, 6) << ',';
    else
      os << ",,";
    if (row->pesq)
      os << format_fixed(row->pesq->mean, 6) << ','
         << format_fixed(row->pesq->ci95, 6) << ',';
    else
      os << "n/a,n/a,";
    if (!row->gamma_label.empty() && !row->failed)
      os << format_fixed(row->kl.mean_kl_speech, 6) << ','
         << format_fixed(row->kl.mean_kl_noise, 6) << ',';
    else
      os << ",,";
    if (row->trainable_params > 0) os << row->trainable_params;
    os << ',' << (row->failed ? 1 : 0) << '\n';
  }
}

void write_table_markdown(const std::string& path, const SweepReport& report) {
  auto os = open_out(path);
  os << "| Method | SI-SDR (dB) | STOI (%) | PESQ | Params |\n";
  os << "| --- | --- | --- | --- | --- |\n";
  for (const SweepRow* row : presentation_order(report)) {
    const std::string name =
        row->gamma_label.empty()
            ? row->method
            : (row->gamma_label == "inf" ? std::string("β-PVAE (γ=∞)")
               : row->gamma_label == "1"
                   ? std::string("PVAE (γ=1)")
                   : "β-PVAE (γ=" + row->gamma_label + ")");
    os << "| " << name << " | ";
    if (row->failed) {
      os << "failed | failed | failed | — |\n";
      continue;
    }
    os << agg_cell(row->si_sdr, 2, 1.0) << " | "
       << agg_cell(row->stoi, 1, 100.0) << " | "
       << (row->pesq ? agg_cell(*row->pesq, 2, 1.0) : std::string("n/a"))
       << " | "
       << (row->trainable_params > 0 ? std::to_string(row->trainable_params)
                                     : std::string("—"))
       << " |\n";
  }
  bool any_failed = false;
  for (const auto& row : report.rows) any_failed |= row.failed;
  if (any_failed) {
    os << "\n";
    for (const SweepRow* row : presentation_order(report))
      if (row->failed)
        os << "- " << row->method << " failed: " << row->error << "\n";
  }
}

void write_kl_svg(const std::string& path, const SweepReport& report) {
  auto os = open_out(path);
  struct Point {
    double x;  // log10(gamma); inf handled as rightmost category
    std::string label;
    double kl_speech, kl_noise;
    bool inf;
  };
  std::vector<Point> pts;
  for (const SweepRow* row : presentation_order(report)) {
    if (row->gamma_label.empty() || row->failed) continue;
    Point p;
    p.inf = row->gamma_label == "inf";
    p.x = p.inf ? 0.0 : std::log10(std::stod(row->gamma_label));
    p.label = row->gamma_label;
    p.kl_speech = row->kl.mean_kl_speech;
    p.kl_noise = row->kl.mean_kl_noise;
    pts.push_back(p);
  }

  const int width = 640, height = 420;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
     << height << "\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height
     << "\" fill=\"white\"/>\n";
  if (pts.empty()) {
    os << "<text x=\"24\" y=\"40\" font-family=\"sans-serif\" font-size=\"14\">"
          "no successful gamma runs</text>\n</svg>\n";
    return;
  }

  double max_finite_x = 0.0;
  bool any_finite = false;
  for (const auto& p : pts)
    if (!p.inf) {
      max_finite_x = any_finite ? std::max(max_finite_x, p.x) : p.x;
      any_finite = true;
    }
  const double inf_x = any_finite ? max_finite_x + 1.0 : 1.0;
  double min_x = inf_x, max_x = any_finite ? 0.0 : inf_x;
  for (auto& p : pts) {
    if (p.inf) p.x = inf_x;
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
  }
  if (max_x - min_x < 1e-9) { min_x -= 0.5; max_x += 0.5; }

  double max_y = 0.0;
  for (const auto& p : pts)
    max_y = std::max({max_y, p.kl_speech, p.kl_noise});
  if (max_y <= 0.0) max_y = 1.0;

  const double x0 = 70, x1 = width - 30, y0 = height - 60, y1 = 30;
  auto sx = [&](double x) { return x0 + (x - min_x) / (max_x - min_x) * (x1 - x0); };
  auto sy = [&](double y) { return y0 - y / (1.1 * max_y) * (y0 - y1); };

  os << "<line x1=\"" << format_fixed(x0, 1) << "\" y1=\"" << format_fixed(y0, 1)
     << "\" x2=\"" << format_fixed(x1, 1) << "\" y2=\"" << format_fixed(y0, 1)
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << format_fixed(x0, 1) << "\" y1=\"" << format_fixed(y0, 1)
     << "\" x2=\"" << format_fixed(x0, 1) << "\" y2=\"" << format_fixed(y1, 1)
     << "\" stroke=\"black\"/>\n";

  for (const auto& p : pts) {
    os << "<text x=\"" << format_fixed(sx(p.x), 1) << "\" y=\""
       << format_fixed(y0 + 18, 1)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\">"
       << (p.inf ? "∞" : p.label) << "</text>\n";
  }
  for (int t = 0; t <= 4; t++) {
    const double y = 1.1 * max_y * t / 4.0;
    os << "<text x=\"" << format_fixed(x0 - 8, 1) << "\" y=\""
       << format_fixed(sy(y) + 4, 1)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << format_fixed(y, 2) << "</text>\n";
  }
  os << "<text x=\"" << format_fixed((x0 + x1) / 2, 1) << "\" y=\""
     << format_fixed(height - 16.0, 1)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">gamma (log scale)</text>\n";
  os << "<text x=\"18\" y=\"" << format_fixed((y0 + y1) / 2, 1)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        "transform=\"rotate(-90 18 "
     << format_fixed((y0 + y1) / 2, 1)
     << ")\">mean validation KL</text>\n";

  const char* colors[2] = {"#1f77b4", "#d62728"};
  const char* names[2] = {"KL speech head", "KL noise head"};
  for (int series = 0; series < 2; series++) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[series]
       << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : pts) {
      const double y = series == 0 ? p.kl_speech : p.kl_noise;
      os << format_fixed(sx(p.x), 1) << ',' << format_fixed(sy(y), 1) << ' ';
    }
    os << "\"/>\n";
    for (const auto& p : pts) {
      const double y = series == 0 ? p.kl_speech : p.kl_noise;
      os << "<circle cx=\"" << format_fixed(sx(p.x), 1) << "\" cy=\""
         << format_fixed(sy(y), 1) << "\" r=\"3\" fill=\"" << colors[series]
         << "\"/>\n";
    }
    os << "<rect x=\"" << format_fixed(x1 - 170.0, 1) << "\" y=\""
       << format_fixed(y1 + 10.0 + 20.0 * series, 1)
       << "\" width=\"12\" height=\"12\" fill=\"" << colors[series]
       << "\"/>\n";
    os << "<text x=\"" << format_fixed(x1 - 152.0, 1) << "\" y=\""
       << format_fixed(y1 + 20.0 + 20.0 * series, 1)
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << names[series]
       << "</text>\n";
  }
  os << "</svg>\n";
}

void write_aggregate_json(const std::string& path, const SweepReport& report) {
  json rows = json::array();
  for (const SweepRow* row : presentation_order(report)) {
    json j;
    j["method"] = row->method;
    j["gamma"] = row->gamma_label;
    j["si_sdr_db"] = aggregate_json(row->si_sdr);
    j["stoi"] = aggregate_json(row->stoi);
    j["pesq"] = row->pesq ? aggregate_json(*row->pesq) : json(nullptr);
    if (!row->gamma_label.empty() && !row->failed) {
      j["kl_speech"] = row->kl.mean_kl_speech;
      j["kl_noise"] = row->kl.mean_kl_noise;
    }
    if (row->trainable_params > 0) j["trainable_params"] = row->trainable_params;
    if (!row->checkpoint.empty()) j["checkpoint"] = row->checkpoint;
    j["failed"] = row->failed;
    if (row->failed) j["error"] = row->error;
    rows.push_back(std::move(j));
  }
  auto os = open_out(path);
  os << json{{"rows", rows}}.dump(2) << '\n';
}

void emit_report(const SweepReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_sweep_csv(out_dir + "/sweep.csv", report);
  write_table_markdown(out_dir + "/table.md", report);
  write_kl_svg(out_dir + "/kl_divergence.svg", report);
  write_aggregate_json(out_dir + "/aggregate.json", report);
}

void write_eval_csv(const std::string& path,
                    const std::vector<EvalRecord>& records) {
  auto os = open_out(path);
  os << "utterance_id,si_sdr_db,stoi,pesq\n";
  for (const auto& rec : records) {
    os << rec.utterance_id << ',' << format_fixed(rec.si_sdr_db, 6) << ','
       << format_fixed(rec.stoi, 6) << ','
       << (rec.pesq ? format_fixed(*rec.pesq, 6) : std::string("n/a")) << '\n';
  }
}

void write_eval_aggregate_json(const std::string& path,
                               const std::vector<EvalRecord>& records) {
  std::vector<double> sisdr, st, pq;
  for (const auto& r : records) {
    sisdr.push_back(r.si_sdr_db);
    st.push_back(r.stoi);
    if (r.pesq) pq.push_back(*r.pesq);
  }
  json j;
  j["n"] = records.size();
  j["si_sdr_db"] =
      sisdr.size() >= 2 ? aggregate_json(aggregate(sisdr)) : json(nullptr);
  j["stoi"] = st.size() >= 2 ? aggregate_json(aggregate(st)) : json(nullptr);
  j["pesq"] = pq.size() >= 2 ? aggregate_json(aggregate(pq)) : json(nullptr);
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

}  // namespace bpvae
