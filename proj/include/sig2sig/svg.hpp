#pragma once

// Minimal SVG line plots: a grid of panels, one per signal, each with up to
// two overlaid series (first blue, second purple). Every panel is scaled to
// its own data range.

#include <optional>
#include <string>
#include <vector>

namespace sig2sig::svg {

using Series = std::vector<std::vector<double>>;

struct GridLayout {
  std::size_t cols = 1;
  std::size_t rows = 1;
};

// ceil(sqrt(n)) columns; 16 panels give a 4x4 grid.
GridLayout grid_for(std::size_t panels);

// `overlay`, when given, must have the same count and lengths as `primary`.
std::string plot_grid(const Series& primary, const std::optional<Series>& overlay,
                      const std::string& title);

}  // namespace sig2sig::svg
