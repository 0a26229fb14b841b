#pragma once

namespace cpl {

/// C^2 cutoff: 1 on [0,1), quintic smoothstep transition on [1, 2], 0 beyond.
/// chi_bar = 1 - chi.
struct Cutoff {
  /// Transition endpoint; the drop happens on [1, hi]. Default follows the
  /// standard [1, 2] window.
  double hi = 2.0;

  double chi(double s) const;
  double chi_bar(double s) const { return 1.0 - chi(s); }
  double dchi(double s) const;
  double d2chi(double s) const;
};

}  // namespace cpl
