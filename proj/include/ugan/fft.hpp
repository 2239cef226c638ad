#pragma once

#include "types.hpp"

namespace ugan {

// Centered, orthonormal 2-D DFT over the last two dimensions. Every leading index is an
// independent image. ifft2c is both the inverse and the adjoint of fft2c.
CTensor fft2c(CTensor const &x);
CTensor ifft2c(CTensor const &x);

// In-place variants on a single H x W image
void fft2c_inplace(std::span<Cx> img, Index h, Index w);
void ifft2c_inplace(std::span<Cx> img, Index h, Index w);

} // namespace ugan
