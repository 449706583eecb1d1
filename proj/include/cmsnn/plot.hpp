#pragma once

#include <filesystem>
#include <vector>

#include "cmsnn/eval.hpp"
#include "cmsnn/yinyang.hpp"

namespace cmsnn {

// Self-contained SVG box plot of the report groups: one cluster of boxes
// per hidden width, models color-coded, whiskers and outliers drawn, and a
// significance bracket for every pairwise test with adjusted p < 0.05.
void write_boxplot_svg(const std::vector<EvalReport>& groups, const std::filesystem::path& path);

// Scatter rendering of a dataset split, for eyeballing the symbol geometry.
void write_scatter_svg(const DatasetSplit& split, const std::filesystem::path& path);

}  // namespace cmsnn
