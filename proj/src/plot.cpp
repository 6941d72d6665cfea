#include "spp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace spp::cli {
namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 190.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string escape(const std::string& s) {
  std::string out;
  for (const char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v;
  return s.str();
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& y_label, const std::vector<Series>& series) {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.y[i] > 0.0) || !std::isfinite(s.y[i])) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, std::log10(s.y[i]));
      y_max = std::max(y_max, std::log10(s.y[i]));
    }
  }
  const bool empty = !std::isfinite(x_min);
  if (empty) {
    x_min = 0.0;
    x_max = 1.0;
    y_min = -1.0;
    y_max = 0.0;
  }
  y_min = std::floor(y_min);
  y_max = std::ceil(y_max);
  if (y_max <= y_min) y_max = y_min + 1.0;
  if (x_max <= x_min) x_max = x_min + 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double ly) { return kTop + (y_max - ly) / (y_max - y_min) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  const int decades = static_cast<int>(y_max - y_min);
  const int step = std::max(1, decades / 8);
  for (int e = static_cast<int>(y_min); e <= static_cast<int>(y_max); e += step) {
    const double y = py(e);
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << num(y)
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  for (int t = 0; t <= 5; ++t) {
    const double xv = x_min + (x_max - x_min) * t / 5.0;
    const double x = px(xv);
    svg << "<line x1=\"" << num(x) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << num(x) << "\" y2=\""
        << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(x) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
        << static_cast<long long>(std::llround(xv)) << "</text>\n";
  }
  svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << kHeight - 14 << "\" text-anchor=\"middle\">k</text>\n";
  svg << "<text transform=\"translate(18," << num(kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";
  if (empty) {
    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kTop + plot_h / 2)
        << "\" text-anchor=\"middle\" fill=\"#888888\">no positive values to plot</text>\n";
  }

  for (std::size_t c = 0; c < series.size(); ++c) {
    const auto& s = series[c];
    const char* color = kPalette[c % (sizeof(kPalette) / sizeof(kPalette[0]))];
    // Nonpositive or missing values break the polyline.
    std::ostringstream points;
    auto flush = [&] {
      const std::string p = points.str();
      if (!p.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << p << "\"/>\n";
      }
      points.str("");
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.y[i] > 0.0) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      points << num(px(s.x[i])) << ',' << num(py(std::log10(s.y[i]))) << ' ';
    }
    flush();
    const double ly = kTop + 14 + 18.0 * static_cast<double>(c);
    svg << "<line x1=\"" << kLeft + plot_w + 12 << "\" y1=\"" << num(ly) << "\" x2=\"" << kLeft + plot_w + 36
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w + 42 << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<fs::path> cmd_plot(const std::vector<fs::path>& csv_files, const fs::path& output_dir) {
#ifndef SPP_WITH_PLOT
  (void)csv_files;
  (void)output_dir;
  throw Error(ErrorCode::unsupported, "built without plot support (SPP_WITH_PLOT=OFF)");
#else
  if (csv_files.empty()) throw Error(ErrorCode::parse, "no trace CSV files given");
  std::vector<Series> envelope;
  std::vector<Series> feasibility;
  for (const auto& file : csv_files) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::io, "cannot open " + file.string());
    std::vector<TraceRecord> rows;
    try {
      rows = read_trace_csv(in);
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.what());
    }
    Series env{file.stem().string(), {}, {}};
    Series feas{file.stem().string(), {}, {}};
    for (const auto& r : rows) {
      env.x.push_back(static_cast<double>(r.k));
      env.y.push_back(r.envelope_residual);
      feas.x.push_back(static_cast<double>(r.k));
      feas.y.push_back(r.feasibility_residual);
    }
    envelope.push_back(std::move(env));
    feasibility.push_back(std::move(feas));
  }
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + output_dir.string() + ": " + ec.message());
  const std::vector<std::pair<fs::path, std::string>> figures = {
      {output_dir / "envelope_residual.svg", render_svg("Envelope residual", "|F_mu_k(x^k) - F*|", envelope)},
      {output_dir / "feasibility_residual.svg", render_svg("Feasibility residual", "E dist^2(x^k, X_xi)", feasibility)},
  };
  std::vector<fs::path> written;
  for (const auto& [path, content] : figures) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << content;
    written.push_back(path);
  }
  return written;
#endif
}

}  // namespace spp::cli
