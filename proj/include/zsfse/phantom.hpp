#pragma once

#include <cstdint>

#include "zsfse/linops.hpp"
#include "zsfse/signal_model.hpp"

namespace zs {

struct Phantom
{
  ReImage t2; // ms, 0 off support
  ReImage pd;
  BoolImage support;

  auto width() const -> Index { return t2.rows(); }
  auto height() const -> Index { return t2.cols(); }
};

/// Ellipse-based brain-like slice: white/grey matter, deep nuclei, a
/// long-T2 lesion and CSF-filled ventricles, with smooth PD shading.
auto MakePhantom(Index w, Index h, std::uint64_t seed) -> Phantom;

/// Smooth complex coil maps (circular-coil falloff times a low-order phase
/// polynomial) with unit root-sum-of-squares everywhere, phase-referenced to
/// coil 0.
auto MakeSensMaps(Index coils, Index w, Index h, std::uint64_t seed) -> SensMaps;

struct SimulatedScan
{
  EchoSeriesKSpace kspace; // fully sampled
  EchoImages truth; // X_T = pd * s(t)
};

/// Per-pixel EPG evolutions, coil weighting, unitary FFT, complex white noise
/// with E|n|^2 = noiseSigma^2 per sample.
auto SimulateKSpace(Phantom const &ph, SequenceParams const &seq, SensMaps const &sens, double noiseSigma,
                    std::uint64_t seed, double t1 = 1000.0) -> SimulatedScan;

/// Noise-free scan with the same conventions, used to set noise relative to max |Y|.
auto MaxKSpaceMagnitude(EchoSeriesKSpace const &y) -> double;

} // namespace zs
