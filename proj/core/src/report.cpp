#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "gibbsopt/bench.hpp"

namespace gibbsopt {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not an unsigned integer: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string traces_to_csv(const std::vector<LabeledTrace>& traces) {
  std::string out = "algorithm,seed,iteration,objective\n";
  for (const auto& lt : traces) {
    const std::string prefix = lt.algorithm + "," + std::to_string(lt.trace.seed) + ",";
    for (std::size_t t = 0; t < lt.trace.objective.size(); ++t) {
      out += prefix;
      out += std::to_string(t);
      out += ',';
      out += format_double(lt.trace.objective[t]);
      out += '\n';
    }
  }
  return out;
}

std::vector<LabeledTrace> traces_from_csv(std::string_view text) {
  std::vector<LabeledTrace> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != "algorithm,seed,iteration,objective") throw std::invalid_argument("traces CSV: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_fields(line);
    try {
      if (f.size() != 4) throw std::invalid_argument("expected 4 fields");
      const std::string algorithm(f[0]);
      const std::uint64_t seed = parse_u64(f[1]);
      const std::uint64_t iteration = parse_u64(f[2]);
      const double value = parse_double(f[3]);
      if (iteration == 0) {
        LabeledTrace lt;
        lt.algorithm = algorithm;
        lt.trace.seed = seed;
        out.push_back(std::move(lt));
      } else if (out.empty() || out.back().algorithm != algorithm || out.back().trace.seed != seed ||
                 out.back().trace.objective.size() != iteration) {
        throw std::invalid_argument("rows of a trace must be contiguous and start at iteration 0");
      }
      out.back().trace.objective.push_back(value);
      if (!std::isfinite(value)) out.back().trace.diverged = true;
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("traces CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::string optional_field(bool present, double v) { return present ? format_double(v) : std::string(); }

std::string cell_params(const CellResult& cell) {
  const Algorithm a = cell.algorithm;
  const bool gamma = a != Algorithm::asubsgdp;
  return optional_field(uses_beta(a), cell.params.beta) + "," + optional_field(gamma, cell.params.gamma0) + "," +
         optional_field(gamma, cell.params.c_gamma) + "," + (uses_eta(a) ? std::to_string(cell.params.eta) : "");
}

}  // namespace

std::string grid_to_csv(const GridResult& result) {
  std::string out =
      "algorithm,beta,gamma0,c_gamma,eta,total_descent,absolute_ascent,utility,mean_objective,defined,passed\n";
  for (const auto& cell : result.cells) {
    const UtilityReport& r = cell.report;
    out += std::string(to_string(cell.algorithm)) + "," + cell_params(cell) + "," + format_double(r.total_descent) +
           "," + format_double(r.absolute_ascent) + "," + optional_field(r.defined, r.utility) + "," +
           format_double(r.mean_objective) + "," + (r.defined ? "1" : "0") + "," + (cell.passed ? "1" : "0") + "\n";
  }
  return out;
}

std::string winners_to_csv(const GridResult& result) {
  std::string out = "algorithm,status,beta,gamma0,c_gamma,eta,mean_objective,utility\n";
  for (const auto& w : result.winners) {
    out += std::string(to_string(w.algorithm)) + ",";
    if (!w.cell) {
      out += "no_stable_setting,,,,,,\n";
      continue;
    }
    const CellResult& cell = result.cells[*w.cell];
    out += "ok," + cell_params(cell) + "," + format_double(cell.report.mean_objective) + "," +
           format_double(cell.report.utility) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

struct Band {
  std::string name;
  std::vector<double> mean;
  std::vector<double> sd;
};

std::vector<Band> summarize(const std::vector<LabeledTrace>& traces) {
  std::vector<Band> bands;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const RunTrace*>> groups;
  for (const auto& lt : traces) {
    auto it = index.find(lt.algorithm);
    if (it == index.end()) {
      it = index.emplace(lt.algorithm, bands.size()).first;
      bands.push_back(Band{lt.algorithm, {}, {}});
      groups.emplace_back();
    }
    groups[it->second].push_back(&lt.trace);
  }
  for (std::size_t b = 0; b < bands.size(); ++b) {
    std::size_t len = 0;
    for (const RunTrace* t : groups[b]) len = std::max(len, t->objective.size());
    bands[b].mean.assign(len, std::numeric_limits<double>::quiet_NaN());
    bands[b].sd.assign(len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      double sum = 0.0;
      double sq = 0.0;
      std::size_t k = 0;
      for (const RunTrace* t : groups[b]) {
        if (i >= t->objective.size() || !std::isfinite(t->objective[i])) continue;
        sum += t->objective[i];
        ++k;
      }
      if (k == 0) continue;
      const double m = sum / static_cast<double>(k);
      for (const RunTrace* t : groups[b]) {
        if (i >= t->objective.size() || !std::isfinite(t->objective[i])) continue;
        sq += (t->objective[i] - m) * (t->objective[i] - m);
      }
      bands[b].mean[i] = m;
      bands[b].sd[i] = k > 1 ? std::sqrt(sq / static_cast<double>(k - 1)) : 0.0;
    }
  }
  return bands;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string traces_to_svg(const std::vector<LabeledTrace>& traces, bool log_y) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
  constexpr double width = 800, height = 500, left = 80, right = 160, top = 20, bottom = 50;
  const std::vector<Band> bands = summarize(traces);

  auto ty = [log_y](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double xmax = 1.0;
  double ylo = std::numeric_limits<double>::infinity();
  double yhi = -std::numeric_limits<double>::infinity();
  for (const auto& b : bands) {
    xmax = std::max(xmax, static_cast<double>(b.mean.size() > 0 ? b.mean.size() - 1 : 0));
    for (std::size_t i = 0; i < b.mean.size(); ++i) {
      if (!std::isfinite(b.mean[i])) continue;
      const double lo = log_y ? b.mean[i] : b.mean[i] - b.sd[i];
      ylo = std::min(ylo, ty(lo));
      yhi = std::max(yhi, ty(b.mean[i] + b.sd[i]));
    }
  }
  if (!(ylo < yhi)) {
    ylo = std::isfinite(ylo) ? ylo - 1.0 : 0.0;
    yhi = ylo + 2.0;
  }
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto px = [&](double x) { return left + pw * x / xmax; };
  auto py = [&](double y) { return top + ph * (1.0 - (ty(y) - ylo) / (yhi - ylo)); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
                    fmt(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) + "\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fy = ylo + (yhi - ylo) * k / 4.0;
    const double y = top + ph * (1.0 - k / 4.0);
    const double label = log_y ? std::pow(10.0, fy) : fy;
    svg += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + tick_label(label) +
           "</text>\n";
    const double x = left + pw * k / 4.0;
    svg += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(top + ph + 18) + "\" text-anchor=\"middle\">" +
           tick_label(xmax * k / 4.0) + "</text>\n";
  }
  svg += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(height - 10) +
         "\" text-anchor=\"middle\">iteration</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(top + ph / 2) + "\" transform=\"rotate(-90 16 " + fmt(top + ph / 2) +
         ")\" text-anchor=\"middle\">objective</text>\n";

  for (std::size_t b = 0; b < bands.size(); ++b) {
    const Band& band = bands[b];
    const char* color = colors[b % (sizeof colors / sizeof colors[0])];
    std::string upper;
    std::string lower;
    std::string line;
    for (std::size_t i = 0; i < band.mean.size(); ++i) {
      if (!std::isfinite(band.mean[i])) continue;
      const std::string x = fmt(px(static_cast<double>(i)));
      line += x + "," + fmt(py(band.mean[i])) + " ";
      upper += x + "," + fmt(py(band.mean[i] + band.sd[i])) + " ";
      const double lo = band.mean[i] - band.sd[i];
      lower.insert(0, x + "," + fmt(py(log_y && lo <= 0.0 ? band.mean[i] : lo)) + " ");
    }
    svg += "<polygon points=\"" + upper + lower + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(b + 1);
    svg += "<line x1=\"" + fmt(width - right + 12) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(width - right + 32) +
           "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(width - right + 38) + "\" y=\"" + fmt(ly) + "\">" + band.name + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_report(const GridResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<LabeledTrace> traces;
  for (const auto& cell : result.cells) {
    for (const auto& t : cell.traces) traces.push_back(LabeledTrace{std::string(to_string(cell.algorithm)), t});
  }
  write_text(out_dir / "traces.csv", traces_to_csv(traces));
  write_text(out_dir / "grid.csv", grid_to_csv(result));
  write_text(out_dir / "winners.csv", winners_to_csv(result));
  write_text(out_dir / "fig.svg", traces_to_svg(traces));
}

}  // namespace gibbsopt
