#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace dce::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

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

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\" font-family=\"sans-serif\">" + escape(s) + "</text>\n";
}

std::string line(double x1, double y1, double x2, double y2, const char* stroke = "#333") {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
         "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
}

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

}  // namespace

std::string svg_box_panels(const std::vector<BoxPanel>& panels) {
  const double pw = 260, ph = 300, top = 40, bottom = 60, left = 50;
  const double width = left + pw * static_cast<double>(std::max<std::size_t>(panels.size(), 1)) + 20;
  const double height = top + ph + bottom;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                  num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const BoxPanel& panel = panels[p];
    const double x0 = left + pw * static_cast<double>(p);
    const double inner = pw - 40;
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& b : panel.boxes) {
      if (b.stats.n == 0) continue;
      lo = any ? std::min(lo, b.stats.min) : b.stats.min;
      hi = any ? std::max(hi, b.stats.max) : b.stats.max;
      any = true;
    }
    lo = std::min(lo, 0.0);
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    hi += pad;
    auto ypos = [&](double v) { return top + ph - (v - lo) / (hi - lo) * ph; };

    s += text(x0 + inner / 2, top - 15, panel.title, "middle", 14);
    s += line(x0, top, x0, top + ph);
    s += line(x0, top + ph, x0 + inner, top + ph);
    for (int t = 0; t <= 4; ++t) {
      const double v = lo + (hi - lo) * t / 4.0;
      s += line(x0 - 4, ypos(v), x0, ypos(v));
      s += text(x0 - 6, ypos(v) + 4, num(v), "end", 10);
    }

    const double slot = inner / static_cast<double>(std::max<std::size_t>(panel.boxes.size(), 1));
    for (std::size_t k = 0; k < panel.boxes.size(); ++k) {
      const BoxSeries& b = panel.boxes[k];
      const double cx = x0 + slot * (static_cast<double>(k) + 0.5);
      const double bw = std::min(40.0, slot * 0.6);
      const char* color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
      s += "<g transform=\"rotate(30 " + num(cx) + " " + num(top + ph + 14) + ")\">" +
           text(cx, top + ph + 14, b.label, "start", 10) + "</g>\n";
      if (b.stats.n == 0) continue;
      const BoxStats& st = b.stats;
      s += line(cx, ypos(st.min), cx, ypos(st.q1));
      s += line(cx, ypos(st.q3), cx, ypos(st.max));
      s += line(cx - bw / 4, ypos(st.min), cx + bw / 4, ypos(st.min));
      s += line(cx - bw / 4, ypos(st.max), cx + bw / 4, ypos(st.max));
      s += "<rect x=\"" + num(cx - bw / 2) + "\" y=\"" + num(ypos(st.q3)) + "\" width=\"" + num(bw) +
           "\" height=\"" + num(std::max(ypos(st.q1) - ypos(st.q3), 0.5)) + "\" fill=\"" + color +
           "\" fill-opacity=\"0.6\" stroke=\"#333\"/>\n";
      s += "<line x1=\"" + num(cx - bw / 2) + "\" y1=\"" + num(ypos(st.median)) + "\" x2=\"" +
           num(cx + bw / 2) + "\" y2=\"" + num(ypos(st.median)) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

std::string svg_heatmap(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth, const std::string& title) {
  const Eigen::Index d = est.rows();
  const double cell = 32, left = 40, top = 50;
  const double width = left + cell * static_cast<double>(d) + 90;
  const double height = top + cell * static_cast<double>(d) + 30;
  const Eigen::MatrixXd diff = est.cwiseAbs() - truth.cwiseAbs();
  const double scale = std::max(diff.cwiseAbs().maxCoeff(), 1e-12);
  const double tmax = std::max(truth.cwiseAbs().maxCoeff(), 1e-12);

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                  num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += text(left + cell * static_cast<double>(d) / 2, 20, title, "middle", 14);
  for (Eigen::Index i = 0; i < d; ++i) {
    s += text(left - 6, top + cell * (static_cast<double>(i) + 0.6), std::to_string(i), "end", 10);
    s += text(left + cell * (static_cast<double>(i) + 0.5), top - 6, std::to_string(i), "middle", 10);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double t = std::clamp(diff(i, j) / scale, -1.0, 1.0);
      // white at 0, red for over-estimates, blue for under-estimates
      const int r = t < 0 ? static_cast<int>(255 * (1 + t)) : 255;
      const int g = static_cast<int>(255 * (1 - std::abs(t)));
      const int b = t > 0 ? static_cast<int>(255 * (1 - t)) : 255;
      char fill[16];
      std::snprintf(fill, sizeof(fill), "#%02x%02x%02x", r, g, b);
      const double x = left + cell * static_cast<double>(j);
      const double y = top + cell * static_cast<double>(i);
      s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
           "\" fill=\"" + fill + "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
      if (truth(i, j) != 0.0) {
        const double w = 1.0 + 3.0 * std::abs(truth(i, j)) / tmax;
        s += "<rect x=\"" + num(x + w / 2) + "\" y=\"" + num(y + w / 2) + "\" width=\"" + num(cell - w) +
             "\" height=\"" + num(cell - w) + "\" fill=\"none\" stroke=\"black\" stroke-width=\"" + num(w) +
             "\"/>\n";
      }
    }
  }
  const double lx = left + cell * static_cast<double>(d) + 15;
  s += text(lx, top + 10, "+" + num(scale), "start", 10);
  s += text(lx, top + cell * static_cast<double>(d) / 2, "0", "start", 10);
  s += text(lx, top + cell * static_cast<double>(d), "-" + num(scale), "start", 10);
  s += "</svg>\n";
  return s;
}

}  // namespace dce::cli
