#pragma once

#include "../types.hpp"

namespace ugan {

// L-level orthonormal 2-D Haar transform of [H, W] arrays, coefficients in the usual nested
// layout (approximation in the top-left H/2^L x W/2^L block). Real and imaginary parts are
// transformed independently.
CTensor Dwt2(CTensor const &x, Index levels = 3);
CTensor Idwt2(CTensor const &c, Index levels = 3);

// c * max(|c| - tau, 0) / |c|, and 0 at c = 0
Cx SoftThreshold(Cx c, double tau);
CTensor SoftThreshold(CTensor const &c, double tau);

} // namespace ugan
