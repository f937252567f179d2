// sRGB -> CIELAB conversion (D65, 2 degree observer) and the CIEDE2000
// perceptually uniform color difference.

#pragma once

#include "carloam/types.hpp"

namespace carloam {

/// CIELAB coordinates. L in [0,100] for in-gamut sRGB input.
struct LabColor {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

/// sRGB inverse companding, linear RGB -> XYZ (D65), XYZ -> CIELAB.
LabColor srgb_to_lab(const RgbColor& c);

/// Full CIEDE2000 difference with parametric factors kL = kC = kH = 1.
/// The chroma/hue terms are derived internally; callers pass plain Lab.
double ciede2000(const LabColor& x, const LabColor& y);

/// Convenience composition srgb_to_lab -> ciede2000.
double color_difference_rgb(const RgbColor& x, const RgbColor& y);

}  // namespace carloam
