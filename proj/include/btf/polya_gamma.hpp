#pragma once

#include "btf/rng.hpp"

namespace btf {

// Draw from the Polya-Gamma distribution PG(b, c), b > 0.
//
// Integer b uses the exact alternating-series sampler for PG(1, c)
// (Devroye-style) summed b times; above b = 170 a moment-matched normal
// approximation takes over. Non-integer b adds a truncated sum-of-gammas
// draw for the fractional part with a deterministic tail-mean correction.
double polya_gamma_sample(double b, double c, Rng& rng);

// Exact moments, used by the normal-approximation branch and by tests.
double polya_gamma_mean(double b, double c);
double polya_gamma_variance(double b, double c);

}  // namespace btf
