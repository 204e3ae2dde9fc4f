#include "spinedrill/svg.hpp"

#include "spinedrill/errors.hpp"
#include "spinedrill/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace spinedrill {

namespace {

std::string fx(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

// Diverging ramp, blue (low) to red (high).
std::string heat_color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{{49, 54, 149},
                                                               {116, 173, 209},
                                                               {254, 224, 144},
                                                               {244, 109, 67},
                                                               {165, 0, 38}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fx(w) + "\" height=\"" + fx(h) +
         "\" viewBox=\"0 0 " + fx(w) + " " + fx(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
}

}  // namespace

std::string stress_map_svg(const CandidateEvaluation& ev, double vmax_mpa) {
  if (!ev.fe || !ev.material) throw UsageError("candidate " + ev.candidate.id + " has no FE result");
  if (!(vmax_mpa > 0.0)) throw DomainError("stress_map_svg: vmax must be > 0");
  const MaterialField& mat = *ev.material;
  const GridGeometry& g = mat.geometry();
  const Trajectory& traj = ev.candidate.trajectory;

  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(traj.bend_plane_normal[a]) > std::abs(traj.bend_plane_normal[axis])) axis = a;
  const int ua = axis == 0 ? 1 : 0;
  const int va = axis == 2 ? 1 : 2;
  const int slice = std::clamp(
      static_cast<int>(std::floor((traj.entry[axis] - g.origin[axis]) / g.spacing[axis])), 0,
      g.dims[axis] - 1);

  std::vector<double> vm(g.voxel_count(), -1.0);
  const auto& fields = ev.fe->fields;
  for (std::size_t e = 0; e < fields.elements.size(); ++e) vm[fields.elements[e]] = fields.von_mises[e];

  const double px = 8.0;
  const double du = g.spacing[ua] * px, dv = g.spacing[va] * px;
  const double margin = 30.0;
  const double plot_w = g.dims[ua] * du, plot_h = g.dims[va] * dv;
  const double legend_w = 70.0;
  const double width = plot_w + 2 * margin + legend_w, height = plot_h + 2 * margin + 20.0;
  const double top = margin + 20.0;

  std::ostringstream s;
  s << header(width, height);
  s << "<text x=\"" << fx(margin) << "\" y=\"18\">" << escape(ev.candidate.id)
    << " von Mises (MPa), slice " << "xyz"[axis] << " = " << slice << "</text>\n";
  for (int b = 0; b < g.dims[va]; ++b) {
    for (int a = 0; a < g.dims[ua]; ++a) {
      std::array<int, 3> c{};
      c[axis] = slice;
      c[ua] = a;
      c[va] = b;
      const std::size_t v = g.voxel_index(c[0], c[1], c[2]);
      const MaterialClass mc = mat.class_at(v);
      if (mc == MaterialClass::Void) continue;
      const std::string fill = mc == MaterialClass::Screw ? "#808080" : heat_color(vm[v] / vmax_mpa);
      s << "<rect x=\"" << fx(margin + a * du) << "\" y=\"" << fx(top + plot_h - (b + 1) * dv)
        << "\" width=\"" << fx(du) << "\" height=\"" << fx(dv) << "\" fill=\"" << fill << "\"/>\n";
    }
  }

  s << "<polyline fill=\"none\" stroke=\"#000000\" stroke-width=\"1\" stroke-dasharray=\"4 2\" points=\"";
  const int n = std::max(2, static_cast<int>(std::ceil(traj.total_length / 0.5)) + 1);
  for (int i = 0; i < n; ++i) {
    const Vec3 p = traj.point_at(traj.total_length * i / (n - 1));
    const double x = margin + (p[ua] - g.origin[ua]) / g.spacing[ua] * du;
    const double y = top + plot_h - (p[va] - g.origin[va]) / g.spacing[va] * dv;
    s << (i ? " " : "") << fx(x) << "," << fx(y);
  }
  s << "\"/>\n";

  const double lx = margin + plot_w + 20.0;
  const int steps = 20;
  for (int i = 0; i < steps; ++i) {
    const double h = plot_h / steps;
    s << "<rect x=\"" << fx(lx) << "\" y=\"" << fx(top + plot_h - (i + 1) * h) << "\" width=\"14\" height=\""
      << fx(h) << "\" fill=\"" << heat_color((i + 0.5) / steps) << "\"/>\n";
  }
  s << "<text x=\"" << fx(lx + 18) << "\" y=\"" << fx(top + 10) << "\">" << fx(vmax_mpa) << "+</text>\n";
  s << "<text x=\"" << fx(lx + 18) << "\" y=\"" << fx(top + plot_h) << "\">0</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string arc_overlay_svg(const std::vector<ArcTrace>& traces, const std::string& title) {
  struct Projected {
    std::vector<std::array<double, 2>> pts;
    std::vector<std::array<double, 2>> arc;
  };
  std::vector<Projected> proj;
  double umin = 0, umax = 1, vmin = 0, vmax = 1;
  for (const auto& tr : traces) {
    if (tr.points.size() < 3) continue;
    const CircleFit fit = fit_circle(tr.points);
    const Vec3 p0 = tr.points.front();
    const Vec3 n = fit.normal.normalized();
    Vec3 v_axis = fit.straight ? Vec3((tr.points.back() - p0).cross(n)) : Vec3(fit.center - p0);
    v_axis -= v_axis.dot(n) * n;
    v_axis.normalize();
    Vec3 u_axis = v_axis.cross(n);
    if (u_axis.dot(tr.points.back() - p0) < 0) u_axis = -u_axis;
    Projected pr;
    for (const auto& p : tr.points) pr.pts.push_back({(p - p0).dot(u_axis), (p - p0).dot(v_axis)});
    if (!fit.straight) {
      const double cu = (fit.center - p0).dot(u_axis), cv = (fit.center - p0).dot(v_axis);
      const auto& a = pr.pts.front();
      const auto& b = pr.pts.back();
      const double t0 = std::atan2(a[1] - cv, a[0] - cu);
      double t1 = std::atan2(b[1] - cv, b[0] - cu);
      while (t1 - t0 > std::numbers::pi) t1 -= 2 * std::numbers::pi;
      while (t0 - t1 > std::numbers::pi) t1 += 2 * std::numbers::pi;
      for (int i = 0; i <= 64; ++i) {
        const double t = t0 + (t1 - t0) * i / 64.0;
        pr.arc.push_back({cu + fit.radius * std::cos(t), cv + fit.radius * std::sin(t)});
      }
    } else {
      pr.arc = {pr.pts.front(), pr.pts.back()};
    }
    for (const auto* set : {&pr.pts, &pr.arc})
      for (const auto& q : *set) {
        umin = std::min(umin, q[0]);
        umax = std::max(umax, q[0]);
        vmin = std::min(vmin, q[1]);
        vmax = std::max(vmax, q[1]);
      }
    proj.push_back(std::move(pr));
  }

  const double scale = 600.0 / std::max(umax - umin, vmax - vmin);
  const double margin = 30.0, top = 50.0;
  const double width = (umax - umin) * scale + 2 * margin + 120.0;
  const double height = (vmax - vmin) * scale + top + margin;
  auto X = [&](double u) { return margin + (u - umin) * scale; };
  auto Y = [&](double v) { return top + (v - vmin) * scale; };

  std::ostringstream s;
  s << header(width, height);
  s << "<text x=\"" << fx(margin) << "\" y=\"20\">" << escape(title) << "</text>\n";
  for (std::size_t i = 0; i < proj.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    s << "<polyline fill=\"none\" stroke=\"#999999\" stroke-width=\"0.6\" points=\"";
    for (std::size_t k = 0; k < proj[i].pts.size(); ++k)
      s << (k ? " " : "") << fx(X(proj[i].pts[k][0])) << "," << fx(Y(proj[i].pts[k][1]));
    s << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < proj[i].arc.size(); ++k)
      s << (k ? " " : "") << fx(X(proj[i].arc[k][0])) << "," << fx(Y(proj[i].arc[k][1]));
    s << "\"/>\n";
  }
  const std::size_t legend = std::min<std::size_t>(traces.size(), 12);
  for (std::size_t i = 0; i < legend; ++i)
    s << "<text x=\"" << fx(width - 110.0) << "\" y=\"" << fx(top + 14.0 * i) << "\" fill=\""
      << kPalette[i % std::size(kPalette)] << "\">" << escape(traces[i].label) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string histogram_svg(const std::vector<double>& values, double lo, double hi, int bins,
                          const std::string& title, const std::string& x_label,
                          std::optional<std::pair<double, double>> band) {
  if (!(hi > lo) || bins < 1) throw DomainError("histogram_svg: need hi > lo and bins >= 1");
  std::vector<int> counts(bins, 0);
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    const int b = std::clamp(static_cast<int>(std::floor((v - lo) / (hi - lo) * bins)), 0, bins - 1);
    ++counts[b];
  }
  const int peak = std::max(1, *std::max_element(counts.begin(), counts.end()));
  const double margin = 40.0, top = 40.0, plot_w = 480.0, plot_h = 240.0;
  const double width = plot_w + 2 * margin, height = plot_h + top + 50.0;
  auto X = [&](double v) { return margin + (v - lo) / (hi - lo) * plot_w; };

  std::ostringstream s;
  s << header(width, height);
  s << "<text x=\"" << fx(margin) << "\" y=\"20\">" << escape(title) << "</text>\n";
  if (band) {
    const double a = std::clamp(band->first, lo, hi), b = std::clamp(band->second, lo, hi);
    s << "<rect x=\"" << fx(X(a)) << "\" y=\"" << fx(top) << "\" width=\"" << fx(X(b) - X(a))
      << "\" height=\"" << fx(plot_h) << "\" fill=\"#fde0c5\"/>\n";
  }
  const double bw = plot_w / bins;
  for (int i = 0; i < bins; ++i) {
    if (counts[i] == 0) continue;
    const double h = plot_h * counts[i] / peak;
    s << "<rect x=\"" << fx(margin + i * bw) << "\" y=\"" << fx(top + plot_h - h) << "\" width=\"" << fx(bw)
      << "\" height=\"" << fx(h) << "\" fill=\"#4575b4\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n";
  }
  s << "<line x1=\"" << fx(margin) << "\" y1=\"" << fx(top + plot_h) << "\" x2=\"" << fx(margin + plot_w)
    << "\" y2=\"" << fx(top + plot_h) << "\" stroke=\"#000000\"/>\n";
  s << "<text x=\"" << fx(margin) << "\" y=\"" << fx(top + plot_h + 16) << "\">" << fx(lo) << "</text>\n";
  s << "<text x=\"" << fx(margin + plot_w - 24) << "\" y=\"" << fx(top + plot_h + 16) << "\">" << fx(hi)
    << "</text>\n";
  s << "<text x=\"" << fx(margin + plot_w / 2 - 40) << "\" y=\"" << fx(top + plot_h + 34) << "\">"
    << escape(x_label) << "</text>\n";
  s << "<text x=\"4\" y=\"" << fx(top + 10) << "\">" << peak << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace spinedrill
