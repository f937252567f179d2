#include "carloam/color.hpp"

#include <cmath>

namespace carloam {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }

double srgb_linearize(double c) {
  return c > 0.04045 ? std::pow((c + 0.055) / 1.055, 2.4) : c / 12.92;
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  constexpr double delta3 = delta * delta * delta;
  return t > delta3 ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

LabColor srgb_to_lab(const RgbColor& c) {
  const double r = srgb_linearize(c.r / 255.0);
  const double g = srgb_linearize(c.g / 255.0);
  const double b = srgb_linearize(c.b / 255.0);

  // sRGB -> XYZ, D65 white
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.00000);
  const double fz = lab_f(z / 1.08883);

  return LabColor{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double ciede2000(const LabColor& lab1, const LabColor& lab2) {
  constexpr double kL = 1.0, kC = 1.0, kH = 1.0;
  constexpr double pow25to7 = 6103515625.0;  // 25^7
  const double deg360 = deg2rad(360.0);
  const double deg180 = deg2rad(180.0);

  const double C1 = std::hypot(lab1.a, lab1.b);
  const double C2 = std::hypot(lab2.a, lab2.b);
  const double barC = 0.5 * (C1 + C2);
  const double barC7 = std::pow(barC, 7.0);
  const double G = 0.5 * (1.0 - std::sqrt(barC7 / (barC7 + pow25to7)));

  const double a1p = (1.0 + G) * lab1.a;
  const double a2p = (1.0 + G) * lab2.a;
  const double C1p = std::hypot(a1p, lab1.b);
  const double C2p = std::hypot(a2p, lab2.b);

  auto hue = [&](double a, double b) {
    if (a == 0.0 && b == 0.0) return 0.0;
    double h = std::atan2(b, a);
    return h < 0.0 ? h + deg360 : h;
  };
  const double h1p = hue(a1p, lab1.b);
  const double h2p = hue(a2p, lab2.b);

  const double dLp = lab2.L - lab1.L;
  const double dCp = C2p - C1p;

  double dhp = 0.0;
  if (C1p * C2p != 0.0) {
    dhp = h2p - h1p;
    if (dhp > deg180) dhp -= deg360;
    else if (dhp < -deg180) dhp += deg360;
  }
  const double dHp = 2.0 * std::sqrt(C1p * C2p) * std::sin(0.5 * dhp);

  const double barLp = 0.5 * (lab1.L + lab2.L);
  const double barCp = 0.5 * (C1p + C2p);

  double barhp = h1p + h2p;
  if (C1p * C2p != 0.0) {
    if (std::abs(h1p - h2p) <= deg180) {
      barhp = 0.5 * (h1p + h2p);
    } else if (h1p + h2p < deg360) {
      barhp = 0.5 * (h1p + h2p + deg360);
    } else {
      barhp = 0.5 * (h1p + h2p - deg360);
    }
  }

  const double T = 1.0 - 0.17 * std::cos(barhp - deg2rad(30.0)) +
                   0.24 * std::cos(2.0 * barhp) +
                   0.32 * std::cos(3.0 * barhp + deg2rad(6.0)) -
                   0.20 * std::cos(4.0 * barhp - deg2rad(63.0));

  const double dTheta =
      deg2rad(30.0) * std::exp(-std::pow((barhp - deg2rad(275.0)) / deg2rad(25.0), 2.0));
  const double barCp7 = std::pow(barCp, 7.0);
  const double RC = 2.0 * std::sqrt(barCp7 / (barCp7 + pow25to7));
  const double RT = -std::sin(2.0 * dTheta) * RC;

  const double barLp50sq = (barLp - 50.0) * (barLp - 50.0);
  const double SL = 1.0 + 0.015 * barLp50sq / std::sqrt(20.0 + barLp50sq);
  const double SC = 1.0 + 0.045 * barCp;
  const double SH = 1.0 + 0.015 * barCp * T;

  const double tL = dLp / (kL * SL);
  const double tC = dCp / (kC * SC);
  const double tH = dHp / (kH * SH);
  return std::sqrt(tL * tL + tC * tC + tH * tH + RT * tC * tH);
}

double color_difference_rgb(const RgbColor& x, const RgbColor& y) {
  return ciede2000(srgb_to_lab(x), srgb_to_lab(y));
}

}  // namespace carloam
