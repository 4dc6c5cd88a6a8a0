#include "dpgan/eval.hpp"

#include "dpgan/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace dpgan {
namespace {

constexpr std::string_view kResultsHeader =
    "method,dataset,missing_rate,seed,rmse_norm,rmse_raw,alpha_final,wall_time_s";

std::string opt_str(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(fmt::format("results.csv:{}: bad number '{}'", line, s));
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("write failed for {}", path.string()));
}

}  // namespace

SweepReport SweepReport::aggregate(std::vector<TrialResult> results) {
  SweepReport report;
  using Key = std::tuple<std::string, std::string, double>;
  std::map<Key, std::vector<const TrialResult*>> groups;
  for (const auto& r : results) {
    if (!(r.rmse_norm >= 0.0)) throw ValidationError("trial result with negative or NaN rmse");
  }
  report.results = std::move(results);
  for (const auto& r : report.results) groups[{r.method, r.dataset, r.missing_rate}].push_back(&r);
  for (const auto& [key, rows] : groups) {
    RateGroup g;
    std::tie(g.method, g.dataset, g.missing_rate) = key;
    g.trials = static_cast<int>(rows.size());
    std::vector<double> rm;
    std::vector<double> al;
    for (const auto* r : rows) {
      rm.push_back(r->rmse_norm);
      if (r->alpha_final) al.push_back(*r->alpha_final);
    }
    std::tie(g.rmse_mean, g.rmse_std) = mean_std(rm);
    if (!al.empty()) {
      const auto [m, s] = mean_std(al);
      g.alpha_mean = m;
      g.alpha_std = s;
    }
    report.groups.push_back(std::move(g));
  }
  return report;
}

std::string results_csv(std::span<const TrialResult> results) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : results) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.method, r.dataset, r.missing_rate, r.seed, r.rmse_norm,
                       r.rmse_raw, opt_str(r.alpha_final), r.wall_time_s);
  }
  return out;
}

std::string summary_csv(const SweepReport& report) {
  std::string out = "method,dataset,missing_rate,trials,rmse_mean,rmse_std,alpha_mean,alpha_std\n";
  for (const auto& g : report.groups) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", g.method, g.dataset, g.missing_rate, g.trials, g.rmse_mean,
                       g.rmse_std, opt_str(g.alpha_mean), opt_str(g.alpha_std));
  }
  return out;
}

std::vector<TrialResult> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw FormatError("results.csv:1: unexpected header");
  }
  std::vector<TrialResult> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw FormatError(fmt::format("results.csv:{}: expected 8 fields", lineno));
    TrialResult r;
    r.method = f[0];
    r.dataset = f[1];
    r.missing_rate = parse_double(f[2], lineno);
    const auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), r.seed);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size()) {
      throw FormatError(fmt::format("results.csv:{}: bad seed '{}'", lineno, f[3]));
    }
    r.rmse_norm = parse_double(f[4], lineno);
    r.rmse_raw = parse_double(f[5], lineno);
    if (!f[6].empty()) r.alpha_final = parse_double(f[6], lineno);
    r.wall_time_s = parse_double(f[7], lineno);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TrialResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_results_csv(ss.str());
}

std::string plot_svg(const SweepReport& report) {
  constexpr double width = 720;
  constexpr double height = 300;
  constexpr double margin = 50;
  constexpr double panel = (width - 3 * margin) / 2;
  const double plot_h = height - 2 * margin;
  static constexpr std::string_view palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  double rmse_max = 0.0;
  for (const auto& g : report.groups) rmse_max = std::max(rmse_max, g.rmse_mean + g.rmse_std);
  if (rmse_max <= 0.0) rmse_max = 1.0;

  std::map<std::string, std::vector<const RateGroup*>> series;
  for (const auto& g : report.groups) series[g.method + " / " + g.dataset].push_back(&g);

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height);
  auto axes = [&](double x0, std::string_view title, std::string_view ylabel, double ymax) {
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
                       x0 + panel / 2, margin - 20, title);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", x0, margin,
                       margin + plot_h);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", x0,
                       margin + plot_h, x0 + panel);
    for (int t = 0; t <= 5; ++t) {
      const double f = t / 5.0;
      const double y = margin + plot_h * (1 - f);
      const double x = x0 + panel * f;
      svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n", x0 - 4, y + 4, ymax * f);
      svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.1f}</text>\n", x,
                         margin + plot_h + 14, f);
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">missing rate</text>\n", x0 + panel / 2,
                       height - 12);
    svg += fmt::format("<text x=\"{0}\" y=\"{1}\" transform=\"rotate(-90 {0} {1})\" "
                       "text-anchor=\"middle\">{2}</text>\n",
                       x0 - 36, margin + plot_h / 2, ylabel);
  };
  const double left = margin;
  const double right = 2 * margin + panel;
  axes(left, "RMSE vs missing rate", "RMSE", rmse_max);
  axes(right, "alpha vs missing rate", "alpha", 1.0);

  std::size_t color = 0;
  for (const auto& [name, groups] : series) {
    const auto c = palette[color++ % std::size(palette)];
    std::string rmse_pts;
    std::string alpha_pts;
    for (const auto* g : groups) {
      const double x_r = left + panel * g->missing_rate;
      const double y_r = margin + plot_h * (1 - g->rmse_mean / rmse_max);
      rmse_pts += fmt::format("{:.2f},{:.2f} ", x_r, y_r);
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", x_r, y_r, c);
      if (g->alpha_mean) {
        const double x_a = right + panel * g->missing_rate;
        const double y_a = margin + plot_h * (1 - std::clamp(*g->alpha_mean, 0.0, 1.0));
        alpha_pts += fmt::format("{:.2f},{:.2f} ", x_a, y_a);
        svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", x_a, y_a, c);
      }
    }
    svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\"/>\n", rmse_pts, c);
    if (!alpha_pts.empty()) {
      svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\"/>\n", alpha_pts, c);
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", left + 8,
                       margin + 12 + 14 * static_cast<double>(color - 1), c, name);
  }
  svg += "</svg>\n";
  return svg;
}

void emit_report(const SweepReport& report, const std::filesystem::path& dir) {
  if (report.results.empty()) throw ValidationError("emit_report: no results");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  write_file(dir / "results.csv", results_csv(report.results));
  write_file(dir / "summary.csv", summary_csv(report));
  write_file(dir / "plot.svg", plot_svg(report));
}

}  // namespace dpgan
