#include "cpl/cutoff.hpp"

namespace cpl {

namespace {
// quintic smoothstep: 0 -> 1 on [0,1] with vanishing first and second
// derivatives at both ends
inline double smoothstep5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
inline double dsmoothstep5(double t) { return 30.0 * t * t * (1.0 + t * (-2.0 + t)); }
inline double d2smoothstep5(double t) { return 60.0 * t * (1.0 + t * (-3.0 + 2.0 * t)); }
}  // namespace

double Cutoff::chi(double s) const {
  if (s < 1.0) return 1.0;
  if (s >= hi) return 0.0;
  return 1.0 - smoothstep5((s - 1.0) / (hi - 1.0));
}

double Cutoff::dchi(double s) const {
  if (s < 1.0 || s >= hi) return 0.0;
  const double w = hi - 1.0;
  return -dsmoothstep5((s - 1.0) / w) / w;
}

double Cutoff::d2chi(double s) const {
  if (s < 1.0 || s >= hi) return 0.0;
  const double w = hi - 1.0;
  return -d2smoothstep5((s - 1.0) / w) / (w * w);
}

}  // namespace cpl
