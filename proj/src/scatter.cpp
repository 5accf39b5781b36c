#include "morphoscope/scatter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace morphoscope {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 560;
constexpr int kMargin = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return std::string(buf);
}

}  // namespace

std::string render_scatter_svg(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                               const std::vector<int>& y, int dim_x, int dim_y,
                               const std::string& provenance_comment) {
  if (dim_x == dim_y) throw InvalidInput("scatter: the two dimensions must differ");
  if (dim_x < 0 || dim_x >= model.dim || dim_y < 0 || dim_y >= model.dim) {
    throw InvalidInput("scatter: dimension out of range for model of dim " +
                       std::to_string(model.dim));
  }
  const Eigen::Index n = X.rows();
  if (static_cast<Eigen::Index>(y.size()) != n || n == 0) {
    throw InvalidInput("scatter: need matching, nonempty rows and labels");
  }

  const int n_values = model.n_values();
  const DimList pair = {dim_x, dim_y};
  std::vector<GaussianParams> marginals;
  marginals.reserve(static_cast<std::size_t>(n_values));
  for (int v = 0; v < n_values; ++v) {
    marginals.push_back(marginalize(model.gaussians[static_cast<std::size_t>(v)], pair));
  }

  // Data bounding box over points and the radius-2 contour extents.
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = std::numeric_limits<double>::infinity(), hi_y = -lo_y;
  for (Eigen::Index i = 0; i < n; ++i) {
    lo_x = std::min(lo_x, X(i, dim_x));
    hi_x = std::max(hi_x, X(i, dim_x));
    lo_y = std::min(lo_y, X(i, dim_y));
    hi_y = std::max(hi_y, X(i, dim_y));
  }
  for (const auto& g : marginals) {
    const double ex = 2.0 * std::sqrt(g.cov(0, 0));
    const double ey = 2.0 * std::sqrt(g.cov(1, 1));
    lo_x = std::min(lo_x, g.mean[0] - ex);
    hi_x = std::max(hi_x, g.mean[0] + ex);
    lo_y = std::min(lo_y, g.mean[1] - ey);
    hi_y = std::max(hi_y, g.mean[1] + ey);
  }
  const double span_x = std::max(hi_x - lo_x, 1e-12);
  const double span_y = std::max(hi_y - lo_y, 1e-12);
  // Equal-aspect mapping so distance ratios survive the projection.
  const double scale = std::min((kWidth - 2.0 * kMargin) / span_x,
                                (kHeight - 2.0 * kMargin) / span_y);
  const double cx = 0.5 * (lo_x + hi_x);
  const double cy = 0.5 * (lo_y + hi_y);
  const auto px = [&](double x) { return 0.5 * kWidth + (x - cx) * scale; };
  const auto py = [&](double y) { return 0.5 * kHeight - (y - cy) * scale; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  if (!provenance_comment.empty()) {
    svg << "<!-- " << provenance_comment << " -->\n";
  }
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - kMargin / 4
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">dim "
      << dim_x << "</text>\n";
  svg << "<text x=\"" << kMargin / 3 << "\" y=\"" << kHeight / 2
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 "
      << kMargin / 3 << " " << kHeight / 2 << ")\">dim " << dim_y << "</text>\n";

  for (Eigen::Index i = 0; i < n; ++i) {
    const int v = y[static_cast<std::size_t>(i)];
    svg << "<circle class=\"v" << v << "\" cx=\"" << fmt(px(X(i, dim_x))) << "\" cy=\""
        << fmt(py(X(i, dim_y))) << "\" r=\"2\" fill=\"" << kPalette[v % kPaletteSize]
        << "\" fill-opacity=\"0.45\"/>\n";
  }

  for (int v = 0; v < n_values; ++v) {
    const auto& g = marginals[static_cast<std::size_t>(v)];
    Eigen::SelfAdjointEigenSolver<Mat> eig(g.cov);
    const Vec evals = eig.eigenvalues().cwiseMax(0.0);
    const Mat evecs = eig.eigenvectors();
    // Rotation of the major axis (second eigenvector has the larger value).
    const double angle = std::atan2(evecs(1, 1), evecs(0, 1)) * 180.0 / M_PI;
    for (int radius = 1; radius <= 2; ++radius) {
      const double rx = radius * std::sqrt(evals[1]) * scale;
      const double ry = radius * std::sqrt(evals[0]) * scale;
      svg << "<ellipse class=\"contour v" << v << "\" cx=\"0\" cy=\"0\" rx=\"" << fmt(rx)
          << "\" ry=\"" << fmt(ry) << "\" transform=\"translate(" << fmt(px(g.mean[0]))
          << " " << fmt(py(g.mean[1])) << ") rotate(" << fmt(-angle)
          << ")\" fill=\"none\" stroke=\"" << kPalette[v % kPaletteSize]
          << "\" stroke-width=\"1.5\"/>\n";
    }
  }

  for (int v = 0; v < n_values; ++v) {
    const int ly = kMargin + 18 * v;
    svg << "<circle cx=\"" << kWidth - kMargin - 110 << "\" cy=\"" << ly << "\" r=\"4\" fill=\""
        << kPalette[v % kPaletteSize] << "\"/>\n";
    svg << "<text x=\"" << kWidth - kMargin - 100 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << model.schema.values[static_cast<std::size_t>(v)] << "</text>\n";
  }

  svg << "</svg>\n";
  return svg.str();
}

std::vector<ScatterPoint> parse_scatter_points(const std::string& svg) {
  std::vector<ScatterPoint> points;
  std::istringstream in(svg);
  std::string line;
  while (std::getline(in, line)) {
    int v = 0;
    double x = 0.0, y = 0.0;
    if (std::sscanf(line.c_str(), "<circle class=\"v%d\" cx=\"%lf\" cy=\"%lf\"", &v, &x, &y) == 3) {
      points.push_back({v, x, y});
    }
  }
  return points;
}

}  // namespace morphoscope
