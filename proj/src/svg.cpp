#include "sig2sig/svg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sig2sig/error.hpp"

namespace sig2sig::svg {

namespace {

constexpr double kPanelW = 220.0;
constexpr double kPanelH = 130.0;
constexpr double kMargin = 10.0;
constexpr double kTitleH = 28.0;
constexpr const char* kColors[] = {"#1f77b4", "#7b3fa0"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

GridLayout grid_for(std::size_t panels) {
  if (panels == 0) return {1, 1};
  auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(panels))));
  return {cols, (panels + cols - 1) / cols};
}

std::string plot_grid(const Series& primary, const std::optional<Series>& overlay,
                      const std::string& title) {
  if (primary.empty()) throw ShapeError("nothing to plot");
  if (overlay && overlay->size() != primary.size()) {
    throw ShapeError(fmt::format("overlay has {} signals, primary has {}", overlay->size(),
                                 primary.size()));
  }
  const auto layout = grid_for(primary.size());
  const double width = static_cast<double>(layout.cols) * (kPanelW + kMargin) + kMargin;
  const double height = kTitleH + static_cast<double>(layout.rows) * (kPanelH + kMargin) + kMargin;

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\">\n",
      width, height, width, height);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n",
                     width, height);
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"19\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
      kMargin, escape(title));

  for (std::size_t p = 0; p < primary.size(); ++p) {
    std::vector<const std::vector<double>*> lines{&primary[p]};
    if (overlay) {
      if ((*overlay)[p].size() != primary[p].size()) {
        throw ShapeError(fmt::format("signal {}: overlay length {} differs from {}", p,
                                     (*overlay)[p].size(), primary[p].size()));
      }
      lines.push_back(&(*overlay)[p]);
    }
    double lo = lines.front()->empty() ? 0.0 : lines.front()->front(), hi = lo;
    for (const auto* line : lines) {
      for (double v : *line) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }

    const double x0 = kMargin + static_cast<double>(p % layout.cols) * (kPanelW + kMargin);
    const double y0 = kTitleH + kMargin + static_cast<double>(p / layout.cols) * (kPanelH + kMargin);
    out += fmt::format("<g transform=\"translate({:.1f},{:.1f})\">\n", x0, y0);
    out += fmt::format(
        "<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"none\" "
        "stroke=\"#cccccc\"/>\n",
        kPanelW, kPanelH);
    for (std::size_t s = 0; s < lines.size(); ++s) {
      const auto& line = *lines[s];
      const double dx = line.size() > 1 ? kPanelW / static_cast<double>(line.size() - 1) : 0.0;
      std::string points;
      for (std::size_t i = 0; i < line.size(); ++i) {
        // Flat data is drawn through the middle of the panel.
        const double frac = hi > lo ? (line[i] - lo) / (hi - lo) : 0.5;
        const double y = kPanelH - 4.0 - frac * (kPanelH - 8.0);
        if (i) points += ' ';
        points += fmt::format("{:.2f},{:.2f}", static_cast<double>(i) * dx, y);
      }
      out += fmt::format(
          "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
          kColors[s], points);
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace sig2sig::svg
