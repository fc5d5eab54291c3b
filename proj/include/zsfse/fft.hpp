#pragma once

#include "zsfse/array.hpp"

namespace zs {

/// Centered, unitary 1D DFT along the height (ky) axis of every row.
void FftH(CxImage &im, bool inverse);
/// Centered, unitary 1D DFT along the width (kx) axis of every column.
void FftW(CxImage &im, bool inverse);
/// Centered, unitary 2D DFT. The inverse is the exact adjoint.
void Fft2(CxImage &im, bool inverse);

inline auto Fft2(CxImage const &im, bool inverse) -> CxImage
{
  CxImage out = im;
  Fft2(out, inverse);
  return out;
}

template <typename Tag>
auto Fft2(Stack<Tag> const &s, bool inverse) -> Stack<Tag>
{
  Stack<Tag> out = s;
  for (auto &im : out.data) { Fft2(im, inverse); }
  return out;
}

} // namespace zs
