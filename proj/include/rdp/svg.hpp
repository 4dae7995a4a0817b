#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

namespace rdp::svg {

struct Rgb {
  unsigned char r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

inline std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

inline Rgb lerp(Rgb a, Rgb b, double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [t](unsigned char x, unsigned char y) {
    return static_cast<unsigned char>(std::lround(x + (static_cast<double>(y) - x) * t));
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kPositive{33, 102, 172};  // blue
inline constexpr Rgb kNegative{178, 24, 43};   // red
inline constexpr Rgb kNeutral{150, 150, 150};

/// Blue-white-red for t ∈ [−1, 1]; t > 0 is blue.
inline Rgb diverging(double t) {
  if (!(t == t)) return kNeutral;
  return t >= 0.0 ? lerp(kWhite, kPositive, t) : lerp(kWhite, kNegative, -t);
}

/// Viridis-like sequential ramp for t ∈ [0, 1]; t = 1 is the maximum color.
inline Rgb sequential(double t) {
  static constexpr std::array<Rgb, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0);
  const double scaled = t * (stops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(scaled), stops.size() - 2);
  return lerp(stops[i], stops[i + 1], scaled - static_cast<double>(i));
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

inline std::string escape(std::string_view text) {
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

inline std::string header(double width, double height) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         num(width) + "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) +
         "\" font-family=\"sans-serif\">\n";
}

inline std::string text(double x, double y, std::string_view content, double size = 10,
                        std::string_view anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) + "\" text-anchor=\"" +
         std::string(anchor) + "\">" + escape(content) + "</text>\n";
}

inline std::string rect(double x, double y, double w, double h, Rgb fill, std::string_view cls = {}) {
  std::string out = "<rect";
  if (!cls.empty()) out += " class=\"" + std::string(cls) + "\"";
  out += " x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"" +
         hex(fill) + "\"/>\n";
  return out;
}

}  // namespace rdp::svg
