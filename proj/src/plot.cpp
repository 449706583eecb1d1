#include "cmsnn/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>

#include "cmsnn/errors.hpp"
#include "cmsnn/serialize.hpp"

namespace cmsnn {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
                          "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"};

std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  return "*";
}

}  // namespace

void write_boxplot_svg(const std::vector<EvalReport>& groups, const std::filesystem::path& path) {
  if (groups.empty()) throw ContractError("write_boxplot_svg: no groups");
  for (const auto& g : groups) {
    if (g.models.empty()) throw ContractError("write_boxplot_svg: group without models");
    for (const auto& m : g.models) {
      if (m.accuracies.empty()) {
        throw ContractError("write_boxplot_svg: model '" + m.model + "' has no accuracies");
      }
    }
  }

  // layout
  const double box_w = 34.0, box_gap = 14.0, group_gap = 60.0;
  const double margin_l = 70.0, margin_r = 30.0, margin_top = 40.0, margin_bot = 70.0;
  const double plot_h = 320.0;

  int total_boxes = 0;
  for (const auto& g : groups) total_boxes += static_cast<int>(g.models.size());
  const double plot_w = total_boxes * (box_w + box_gap) +
                        (static_cast<double>(groups.size()) - 1.0) * group_gap;

  // significance brackets live above the boxes
  int n_annotations = 0;
  for (const auto& g : groups) {
    for (const auto& t : g.tests) {
      if (t.p_adjusted < 0.05) ++n_annotations;
    }
  }
  const double ann_h = 18.0;
  const double ann_space = n_annotations > 0 ? 12.0 + ann_h * n_annotations : 0.0;
  const double width = margin_l + plot_w + margin_r;
  const double height = margin_top + ann_space + plot_h + margin_bot;

  double a_min = 1.0, a_max = 0.0;
  for (const auto& g : groups) {
    for (const auto& m : g.models) {
      a_min = std::min(a_min, *std::min_element(m.accuracies.begin(), m.accuracies.end()));
      a_max = std::max(a_max, *std::max_element(m.accuracies.begin(), m.accuracies.end()));
    }
  }
  const double pad = std::max(0.02, (a_max - a_min) * 0.1);
  a_min = std::max(0.0, a_min - pad);
  a_max = std::min(1.0, a_max + pad);
  if (a_max <= a_min) a_max = a_min + 0.01;

  const double y0 = margin_top + ann_space;
  auto ay = [&](double acc) { return y0 + (a_max - acc) / (a_max - a_min) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << fmt(width) << "' height='"
      << fmt(height) << "' viewBox='0 0 " << fmt(width) << " " << fmt(height) << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";

  // y axis with ticks every 0.05
  svg << "<line x1='" << fmt(margin_l - 8) << "' y1='" << fmt(y0) << "' x2='" << fmt(margin_l - 8)
      << "' y2='" << fmt(y0 + plot_h) << "' stroke='black'/>\n";
  const double tick0 = std::ceil(a_min / 0.05) * 0.05;
  for (double tick = tick0; tick <= a_max + 1e-9; tick += 0.05) {
    const double y = ay(tick);
    svg << "<line x1='" << fmt(margin_l - 12) << "' y1='" << fmt(y) << "' x2='"
        << fmt(margin_l - 8) << "' y2='" << fmt(y) << "' stroke='black'/>\n";
    svg << "<text x='" << fmt(margin_l - 16) << "' y='" << fmt(y + 4)
        << "' font-size='11' text-anchor='end' font-family='sans-serif'>" << fmt(tick)
        << "</text>\n";
  }
  svg << "<text x='16' y='" << fmt(y0 + plot_h / 2)
      << "' font-size='12' font-family='sans-serif' transform='rotate(-90 16 "
      << fmt(y0 + plot_h / 2) << ")' text-anchor='middle'>test accuracy</text>\n";

  // boxes, remembering each center for the brackets
  std::vector<std::vector<double>> centers(groups.size());
  double x = margin_l;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    const double group_x0 = x;
    for (std::size_t mi = 0; mi < g.models.size(); ++mi) {
      const auto& m = g.models[mi];
      const auto& b = m.box;
      const double cx = x + box_w / 2.0;
      centers[gi].push_back(cx);
      const char* color = kPalette[mi % (sizeof kPalette / sizeof kPalette[0])];

      svg << "<line x1='" << fmt(cx) << "' y1='" << fmt(ay(b.whisker_hi)) << "' x2='" << fmt(cx)
          << "' y2='" << fmt(ay(b.q3)) << "' stroke='black'/>\n";
      svg << "<line x1='" << fmt(cx) << "' y1='" << fmt(ay(b.q1)) << "' x2='" << fmt(cx)
          << "' y2='" << fmt(ay(b.whisker_lo)) << "' stroke='black'/>\n";
      svg << "<line x1='" << fmt(cx - box_w / 4) << "' y1='" << fmt(ay(b.whisker_hi)) << "' x2='"
          << fmt(cx + box_w / 4) << "' y2='" << fmt(ay(b.whisker_hi)) << "' stroke='black'/>\n";
      svg << "<line x1='" << fmt(cx - box_w / 4) << "' y1='" << fmt(ay(b.whisker_lo)) << "' x2='"
          << fmt(cx + box_w / 4) << "' y2='" << fmt(ay(b.whisker_lo)) << "' stroke='black'/>\n";
      svg << "<rect x='" << fmt(x) << "' y='" << fmt(ay(b.q3)) << "' width='" << fmt(box_w)
          << "' height='" << fmt(ay(b.q1) - ay(b.q3)) << "' fill='" << color
          << "' fill-opacity='0.65' stroke='black'/>\n";
      svg << "<line x1='" << fmt(x) << "' y1='" << fmt(ay(b.median)) << "' x2='"
          << fmt(x + box_w) << "' y2='" << fmt(ay(b.median))
          << "' stroke='black' stroke-width='2'/>\n";
      for (double o : b.outliers) {
        svg << "<circle cx='" << fmt(cx) << "' cy='" << fmt(ay(o))
            << "' r='2.5' fill='none' stroke='black'/>\n";
      }
      svg << "<text x='" << fmt(cx) << "' y='" << fmt(y0 + plot_h + 16)
          << "' font-size='10' text-anchor='middle' font-family='sans-serif' transform='rotate(35 "
          << fmt(cx) << " " << fmt(y0 + plot_h + 16) << ")'>" << m.model << "</text>\n";
      x += box_w + box_gap;
    }
    const double group_x1 = x - box_gap;
    svg << "<text x='" << fmt((group_x0 + group_x1) / 2) << "' y='" << fmt(y0 + plot_h + 52)
        << "' font-size='13' text-anchor='middle' font-family='sans-serif'>" << g.hidden
        << " hidden neurons</text>\n";
    x += group_gap;
  }

  // significance brackets, stacked from the top
  int ann_index = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    for (const auto& t : g.tests) {
      if (!(t.p_adjusted < 0.05)) continue;
      int ia = -1, ib = -1;
      for (std::size_t mi = 0; mi < g.models.size(); ++mi) {
        if (g.models[mi].model == t.model_a) ia = static_cast<int>(mi);
        if (g.models[mi].model == t.model_b) ib = static_cast<int>(mi);
      }
      if (ia < 0 || ib < 0) continue;
      const double xa = centers[gi][ia], xb = centers[gi][ib];
      const double y = margin_top + 6.0 + ann_h * ann_index;
      svg << "<line x1='" << fmt(xa) << "' y1='" << fmt(y + 6) << "' x2='" << fmt(xa) << "' y2='"
          << fmt(y + 10) << "' stroke='black'/>\n";
      svg << "<line x1='" << fmt(xb) << "' y1='" << fmt(y + 6) << "' x2='" << fmt(xb) << "' y2='"
          << fmt(y + 10) << "' stroke='black'/>\n";
      svg << "<line x1='" << fmt(xa) << "' y1='" << fmt(y + 6) << "' x2='" << fmt(xb) << "' y2='"
          << fmt(y + 6) << "' stroke='black'/>\n";
      svg << "<text x='" << fmt((xa + xb) / 2) << "' y='" << fmt(y + 3)
          << "' font-size='10' text-anchor='middle' font-family='sans-serif'>"
          << stars(t.p_adjusted) << "</text>\n";
      ++ann_index;
    }
  }

  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

void write_scatter_svg(const DatasetSplit& split, const std::filesystem::path& path) {
  if (split.points.empty()) throw ContractError("write_scatter_svg: empty split");
  const double size = 420.0, margin = 10.0, span = size - 2 * margin;
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << fmt(size) << "' height='"
      << fmt(size) << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<circle cx='" << fmt(margin + 0.5 * span) << "' cy='" << fmt(margin + 0.5 * span)
      << "' r='" << fmt(0.5 * span) << "' fill='none' stroke='#cccccc'/>\n";
  const char* colors[3] = {"#4c72b0", "#dd8452", "#55a868"};
  for (const auto& p : split.points) {
    const double cx = margin + p.features[0] * span;
    const double cy = margin + (1.0 - p.features[1]) * span;  // y axis points up
    svg << "<circle cx='" << fmt(cx) << "' cy='" << fmt(cy) << "' r='2' fill='"
        << colors[static_cast<int>(p.label)] << "'/>\n";
  }
  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

}  // namespace cmsnn
