#pragma once

// Minimal SVG plots for traces and sweeps. Output is plain deterministic text.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "layercon/sim.hpp"

namespace layercon::svg {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x, y;
  bool dashed = false;
  int axis = 0;  // 0 = left, 1 = right
};

struct Frame {
  double x0, x1, y0, y1;
};

inline Frame padded(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double py = 0.05 * (y1 - y0);
  return {x0, x1, y0 - py, y1 + py};
}

class Canvas {
 public:
  Canvas(int w, int h, std::string title) : w_(w), h_(h) {
    s_ << std::fixed << std::setprecision(2);
    s_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
       << ' ' << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(w / 2.0, 20, title, "middle", 14);
  }

  void set_frame(const Frame& f, int axis = 0) { (axis == 0 ? f0_ : f1_) = f; }

  double px(double x) const { return left_ + (x - f0_.x0) / (f0_.x1 - f0_.x0) * (w_ - left_ - right_); }
  double py(double y, int axis = 0) const {
    const Frame& f = axis == 0 ? f0_ : f1_;
    return h_ - bottom_ - (y - f.y0) / (f.y1 - f.y0) * (h_ - top_ - bottom_);
  }

  void axes(const std::string& xlabel, const std::string& ylabel, const std::string& y2label = "") {
    s_ << "<rect x=\"" << left_ << "\" y=\"" << top_ << "\" width=\"" << (w_ - left_ - right_) << "\" height=\""
       << (h_ - top_ - bottom_) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      const double xv = f0_.x0 + (f0_.x1 - f0_.x0) * i / 5.0;
      text(px(xv), h_ - bottom_ + 16, num(xv), "middle", 11);
      const double yv = f0_.y0 + (f0_.y1 - f0_.y0) * i / 5.0;
      text(left_ - 6, py(yv) + 4, num(yv), "end", 11);
      if (!y2label.empty()) {
        const double y2 = f1_.y0 + (f1_.y1 - f1_.y0) * i / 5.0;
        text(w_ - right_ + 6, py(y2, 1) + 4, num(y2), "start", 11);
      }
    }
    text((left_ + w_ - right_) / 2.0, h_ - 8, xlabel, "middle", 12);
    s_ << "<text x=\"14\" y=\"" << h_ / 2.0 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << h_ / 2.0 << ")\">" << ylabel << "</text>\n";
    if (!y2label.empty())
      s_ << "<text x=\"" << w_ - 12 << "\" y=\"" << h_ / 2.0 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(90 "
         << w_ - 12 << ' ' << h_ / 2.0 << ")\">" << y2label << "</text>\n";
  }

  void polyline(const Series& se) {
    if (se.x.empty()) return;
    s_ << "<polyline fill=\"none\" stroke=\"" << se.color << "\" stroke-width=\"1.5\"";
    if (se.dashed) s_ << " stroke-dasharray=\"5,3\"";
    s_ << " points=\"";
    for (std::size_t i = 0; i < se.x.size(); ++i) s_ << px(se.x[i]) << ',' << py(se.y[i], se.axis) << ' ';
    s_ << "\"/>\n";
  }

  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill) {
    s_ << "<polygon fill=\"" << fill << "\" stroke=\"gray\" points=\"";
    for (const auto& [x, y] : pts) s_ << px(x) << ',' << py(y) << ' ';
    s_ << "\"/>\n";
  }

  void circle(double x, double y, double r_data, const std::string& stroke, const std::string& fill = "none") {
    const double r = std::abs(px(x + r_data) - px(x));
    s_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"" << std::max(r, 3.0) << "\" stroke=\"" << stroke
       << "\" fill=\"" << fill << "\"/>\n";
  }

  void legend(const std::vector<Series>& series) {
    double y = top_ + 14;
    for (const auto& se : series) {
      if (se.label.empty()) continue;
      s_ << "<line x1=\"" << left_ + 10 << "\" y1=\"" << y - 4 << "\" x2=\"" << left_ + 30 << "\" y2=\"" << y - 4
         << "\" stroke=\"" << se.color << "\" stroke-width=\"2\"" << (se.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
      text(left_ + 34, y, se.label, "start", 11);
      y += 15;
    }
  }

  void text(double x, double y, const std::string& t, const char* anchor, int size) {
    s_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size << "\" text-anchor=\"" << anchor << "\">" << t
       << "</text>\n";
  }

  std::string str() { return s_.str() + "</svg>\n"; }

 private:
  static std::string num(double v) {
    std::ostringstream o;
    o << std::setprecision(3) << v;
    return o.str();
  }

  int w_, h_;
  double left_ = 60, right_ = 60, top_ = 34, bottom_ = 40;
  Frame f0_{0, 1, 0, 1}, f1_{0, 1, 0, 1};
  std::ostringstream s_;
};

inline Frame frame_of(const std::vector<Series>& ss, int axis) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : ss) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    if (s.axis != axis) continue;
    for (double v : s.y)
      if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (y0 > y1) y0 = 0, y1 = 1;
  return padded(x0, x1, y0, y1);
}

inline std::string line_plot(const std::string& title, const std::string& xl, const std::string& yl,
                             const std::vector<Series>& ss, const std::string& y2l = "") {
  Canvas c(760, 420, title);
  c.set_frame(frame_of(ss, 0), 0);
  c.set_frame(frame_of(ss, 1), 1);
  c.axes(xl, yl, y2l);
  for (const auto& s : ss) c.polyline(s);
  c.legend(ss);
  return c.str();
}

inline std::vector<std::pair<double, double>> polygon_of(const HPolytope& p) {
  std::vector<std::pair<double, double>> pts;
  if (p.dim() != 2) return pts;
  const auto verts = enumerate_vertices(p);
  if (verts.empty()) return pts;
  double cx = 0, cy = 0;
  for (const auto& v : verts) cx += v(0), cy += v(1);
  cx /= static_cast<double>(verts.size());
  cy /= static_cast<double>(verts.size());
  for (const auto& v : verts) pts.emplace_back(v(0), v(1));
  std::sort(pts.begin(), pts.end(), [&](const auto& a, const auto& b) {
    return std::atan2(a.second - cy, a.first - cx) < std::atan2(b.second - cy, b.first - cx);
  });
  return pts;
}

/// Output-plane trajectories of both layers over the safe region (2-D outputs only).
inline std::string trajectory(const Problem& pb, const TraceLog& log) {
  Canvas c(640, 640, "output trajectories: " + pb.name);
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  std::vector<std::vector<std::pair<double, double>>> polys;
  for (const auto& piece : pb.Y.pieces) {
    polys.push_back(polygon_of(piece));
    for (const auto& [x, y] : polys.back()) x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  for (const auto& r : log.records)
    if (r.y.size() >= 2) x0 = std::min(x0, r.y(0)), x1 = std::max(x1, r.y(0)), y0 = std::min(y0, r.y(1)), y1 = std::max(y1, r.y(1));
  const double span = std::max(x1 - x0, y1 - y0) * 1.08;
  const double mx = 0.5 * (x0 + x1), my = 0.5 * (y0 + y1);
  const Frame f{mx - span / 2, mx + span / 2, my - span / 2, my + span / 2};
  c.set_frame(f);
  c.axes("y_1", "y_2");
  for (const auto& p : polys) c.polygon(p, "#e8f0ff");
  Series ref{"higher layer", "#1f77b4", {}, {}, true}, act{"lower layer", "#d62728", {}, {}};
  for (const auto& r : log.records) {
    if (r.ybar.size() < 2) continue;
    ref.x.push_back(r.ybar(0));
    ref.y.push_back(r.ybar(1));
    act.x.push_back(r.y(0));
    act.y.push_back(r.y(1));
  }
  c.polyline(ref);
  c.polyline(act);
  for (const auto& w : pb.mission.waypoints)
    if (w.size() >= 2) c.circle(w(0), w(1), 0.0, "#555555", "#555555");
  if (pb.mission.goal_center.size() >= 2)
    c.circle(pb.mission.goal_center(0), pb.mission.goal_center(1), pb.mission.goal_radius, "#2ca02c");
  c.legend({ref, act});
  return c.str();
}

inline std::string distance(const TraceLog& log) {
  Series d{"||ybar - y||", "#d62728", {}, {}}, e{"epsilon", "#000000", {}, {}, true};
  for (const auto& r : log.records) {
    d.x.push_back(r.t);
    d.y.push_back(r.dist);
  }
  if (!log.records.empty()) {
    e.x = {log.records.front().t, log.records.back().t};
    e.y = {log.epsilon, log.epsilon};
  }
  return line_plot("output distance", "t [s]", "distance", {d, e});
}

inline std::string inputs(const TraceLog& log, const HPolytope& u) {
  std::vector<Series> ss;
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
  if (log.records.empty()) return line_plot("lower-layer inputs", "t [s]", "u", ss);
  const Eigen::Index m = log.records.front().u.size();
  const double t0 = log.records.front().t, t1 = log.records.back().t;
  const auto verts = enumerate_vertices(u);
  for (Eigen::Index i = 0; i < m; ++i) {
    Series s{"u" + std::to_string(i), colors[i % 6], {}, {}};
    for (const auto& r : log.records) {
      s.x.push_back(r.t);
      s.y.push_back(r.u(i));
    }
    ss.push_back(s);
    if (!verts.empty()) {
      double lo = 1e300, hi = -1e300;
      for (const auto& v : verts) lo = std::min(lo, v(i)), hi = std::max(hi, v(i));
      ss.push_back({"u" + std::to_string(i) + " bounds", colors[i % 6], {t0, t1}, {hi, hi}, true});
      ss.push_back({"", colors[i % 6], {t0, t1}, {lo, lo}, true});
    }
  }
  return line_plot("lower-layer inputs", "t [s]", "u", ss);
}

inline std::string sweep(const std::vector<SweepRow>& rows) {
  Series eps{"epsilon", "#d62728", {}, {}}, gam{"gamma", "#1f77b4", {}, {}, true, 1};
  for (const auto& r : rows) {
    if (!std::isfinite(r.epsilon) || !std::isfinite(r.gamma)) continue;
    eps.x.push_back(r.freq_hz);
    eps.y.push_back(r.epsilon);
    gam.x.push_back(r.freq_hz);
    gam.y.push_back(r.gamma);
  }
  return line_plot("tracking precision vs low-level frequency", "1/T_L [Hz]", "epsilon", {eps, gam}, "gamma");
}

}  // namespace layercon::svg
