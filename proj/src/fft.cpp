#include "zsfse/fft.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/FFT>

namespace zs {

namespace {

// Eigen::FFT caches twiddles per length; the cache is private to the thread
// and never changes results.
auto Engine() -> Eigen::FFT<double> &
{
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

// In-place centered unitary transform of a contiguous buffer:
// fftshift(fft(ifftshift(x))) / sqrt(n).
void Centered(std::vector<Cx> &buf, std::vector<Cx> &tmp, bool inverse)
{
  auto const n = static_cast<std::ptrdiff_t>(buf.size());
  auto const c = n / 2;
  std::rotate(buf.begin(), buf.begin() + c, buf.end());
  if (inverse) {
    Engine().inv(tmp, buf);
  } else {
    Engine().fwd(tmp, buf);
  }
  std::rotate(tmp.begin(), tmp.begin() + (n - c), tmp.end());
  double const s = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::ptrdiff_t i = 0; i < n; i++) { buf[static_cast<size_t>(i)] = tmp[static_cast<size_t>(i)] * s; }
}

} // namespace

void FftH(CxImage &im, bool inverse)
{
  Index const w = im.rows(), h = im.cols();
  if (w < 1 || h < 1) { throw ShapeError("FftH: empty image"); }
  std::vector<Cx> buf(static_cast<size_t>(h)), tmp(static_cast<size_t>(h));
  for (Index x = 0; x < w; x++) {
    Cx *row = im.data() + x * h;
    std::copy(row, row + h, buf.begin());
    Centered(buf, tmp, inverse);
    std::copy(buf.begin(), buf.end(), row);
  }
}

void FftW(CxImage &im, bool inverse)
{
  Index const w = im.rows(), h = im.cols();
  if (w < 1 || h < 1) { throw ShapeError("FftW: empty image"); }
  std::vector<Cx> buf(static_cast<size_t>(w)), tmp(static_cast<size_t>(w));
  for (Index y = 0; y < h; y++) {
    for (Index x = 0; x < w; x++) { buf[static_cast<size_t>(x)] = im(x, y); }
    Centered(buf, tmp, inverse);
    for (Index x = 0; x < w; x++) { im(x, y) = buf[static_cast<size_t>(x)]; }
  }
}

void Fft2(CxImage &im, bool inverse)
{
  FftH(im, inverse);
  FftW(im, inverse);
}

} // namespace zs
