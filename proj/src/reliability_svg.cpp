#include "tscal/reliability_svg.hpp"

#include <cstdio>

namespace tscal {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

std::string render_reliability_svg(const ReliabilityBins& bins, const std::string& title) {
  constexpr double width = 480, height = 480;
  constexpr double left = 60, right = 20, top = 40, bottom = 50;
  constexpr double plot_w = width - left - right;
  constexpr double plot_h = height - top - bottom;
  const double m = static_cast<double>(bins.size());
  auto px = [&](double conf) { return left + conf * plot_w; };
  auto py = [&](double value) { return top + (1.0 - value) * plot_h; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "  <title>" + xml_escape(title) + "</title>\n";
  svg += "  <rect class=\"frame\" x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(plot_w) +
         "\" height=\"" + num(plot_h) + "\" fill=\"white\" stroke=\"black\"/>\n";

  svg += "  <g class=\"bars\">\n";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto& b = bins.bins[i];
    const double acc = b.mean_accuracy().value_or(0.0);
    const double x0 = px(static_cast<double>(i) / m);
    const double x1 = px(static_cast<double>(i + 1) / m);
    svg += "    <rect class=\"bar\" data-bin=\"" + std::to_string(i) + "\" data-count=\"" + std::to_string(b.count) +
           "\" x=\"" + num(x0) + "\" y=\"" + num(py(acc)) + "\" width=\"" + num(x1 - x0) + "\" height=\"" +
           num(acc * plot_h) + "\" fill=\"steelblue\" stroke=\"navy\"/>\n";
  }
  svg += "  </g>\n";

  svg += "  <g class=\"confidence\">\n";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto conf = bins.bins[i].mean_confidence();
    if (!conf) continue;
    const double x0 = px(static_cast<double>(i) / m);
    const double x1 = px(static_cast<double>(i + 1) / m);
    svg += "    <line class=\"mean-confidence\" x1=\"" + num(x0) + "\" y1=\"" + num(py(*conf)) + "\" x2=\"" +
           num(x1) + "\" y2=\"" + num(py(*conf)) + "\" stroke=\"crimson\" stroke-width=\"2\"/>\n";
  }
  svg += "  </g>\n";

  svg += "  <line class=\"diagonal\" x1=\"" + num(px(0)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(px(1)) +
         "\" y2=\"" + num(py(1)) + "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  svg += "  <text x=\"" + num(left + plot_w / 2) + "\" y=\"" + num(height - 15) +
         "\" text-anchor=\"middle\">confidence</text>\n";
  svg += "  <text x=\"15\" y=\"" + num(top + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
         num(top + plot_h / 2) + ")\">accuracy</text>\n";
  svg += "  <text x=\"" + num(width / 2) + "\" y=\"25\" text-anchor=\"middle\">" + xml_escape(title) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace tscal
