#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "zsfse/linops.hpp"

namespace zs {

namespace fs = std::filesystem;

/*
 * On-disk array: <stem>.hdr holds key/value text (axes, shape, dtype,
 * endianness, sha256 of the payload) and <stem>.raw holds little-endian
 * float32 (re, im) pairs, row-major in the declared axis order.
 */
struct RawArray
{
  std::vector<std::string> axes;
  std::vector<Index> shape;
  std::vector<std::complex<float>> data;

  auto elements() const -> Index;
};

void SaveArray(fs::path const &stem, RawArray const &a);
/// Throws IoError on a missing file, bad header, length or digest mismatch,
/// and AxisError when `expectAxes` is non-empty and differs from the header.
auto LoadArray(fs::path const &stem, std::vector<std::string> const &expectAxes = {}) -> RawArray;

/// Hex SHA-256 of a byte buffer / of a file's contents.
auto Sha256Hex(void const *bytes, size_t n) -> std::string;
auto Sha256File(fs::path const &path) -> std::string;

// Typed views. Leading axis names: T (echo), K (coefficient), C (coil).
auto ToRaw(EchoImages const &x) -> RawArray;
auto ToRaw(CoeffMaps const &a) -> RawArray;
auto ToRaw(SensMaps const &s) -> RawArray;
auto ToRaw(EchoSeriesKSpace const &y) -> RawArray; // [T, W, H, C]
auto ToRaw(SamplingMask const &m) -> RawArray; // [T, H], 1 + 0i where acquired
auto ToRaw(ReImage const &im) -> RawArray; // [W, H]

auto EchoImagesFromRaw(RawArray const &r) -> EchoImages;
auto CoeffMapsFromRaw(RawArray const &r) -> CoeffMaps;
auto SensMapsFromRaw(RawArray const &r) -> SensMaps;
auto MaskFromRaw(RawArray const &r) -> SamplingMask;
auto KSpaceFromRaw(RawArray const &r, SamplingMask const &mask) -> EchoSeriesKSpace;
auto RealImageFromRaw(RawArray const &r) -> ReImage;

struct PngWindow
{
  double lo = 0.0;
  double hi = 0.0;
};

/// 8-bit grayscale PNG of a real image (W across, H down) with min-max
/// windowing. The window is stored in tEXt chunks and returned.
auto WritePng(fs::path const &path, ReImage const &im) -> PngWindow;

/// Reads back the window recorded by WritePng.
auto ReadPngWindow(fs::path const &path) -> PngWindow;

} // namespace zs
