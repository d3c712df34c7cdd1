#pragma once

#include <iosfwd>

namespace phasebound {

/// Deliberate defects used to verify that the selftest reports failures.
enum class FaultInjection { none, cov_asymmetry };

/**
 * Fast verification subset: quadrature sanity, folded-density
 * normalization, likelihood mixture identity, and a reduced-size
 * degenerate-noise oracle match. Prints one line per check to `out`
 * and returns the number of failed checks.
 */
int run_selftest(std::ostream& out, FaultInjection fault = FaultInjection::none);

} // namespace phasebound
