#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "zsfse/linops.hpp"

namespace zs {

struct AcqSpec
{
  Index linesPerEcho = 4;
  Index centerLines = 2; // ACS lines, acquired in every echo
  std::uint64_t seed = 0;
  Index height = 64; // ky positions
  Index echoes = 32;

  void validate() const;
  /// Per-echo acceleration H / lines.
  auto acceleration() const -> double { return static_cast<double>(height) / static_cast<double>(linesPerEcho); }
};

/// The n ACS ky indices, a contiguous block centred on ky = H / 2.
auto CenterLines(Index height, Index n) -> std::vector<Index>;

/// T2-shuffling pattern: the ACS block in every echo plus
/// (lines - ACS) lines drawn uniformly without replacement from the other ky
/// positions, independently per echo.
auto GenShufflingMask(AcqSpec const &spec) -> SamplingMask;

struct PartitionSpec
{
  double lambdaOverTheta = 2.0 / 3.0; // |Lambda| / |Theta| over non-ACS lines
  double sigmaFraction = 1.0 / 6.0; // Gaussian width as a fraction of H
  Index acsLines = 2; // always kept in Theta
  std::uint64_t seed = 0;

  auto lambdaFraction() const -> double { return lambdaOverTheta / (1.0 + lambdaOverTheta); }
};

/// Number of Lambda lines drawn from n acquired non-ACS lines in one echo.
auto LambdaCount(Index n, PartitionSpec const &spec) -> Index;

struct Partition
{
  SamplingMask theta;
  SamplingMask lambda;
};

/*
 * Split each echo's acquired non-ACS lines into disjoint Theta / Lambda sets.
 * Lambda lines are drawn without replacement with weights exp(-(ky - H/2)^2 /
 * 2 sigma^2); ACS lines always go to Theta. A fresh (seed, epoch) pair gives a
 * fresh, reproducible partition.
 */
auto PartitionThetaLambda(SamplingMask const &mask, PartitionSpec const &spec, std::uint64_t epoch)
  -> Partition;

/// ||u - v||_2 / ||u||_2 + ||u - v||_1 / ||u||_1 over every entry jointly.
auto SsduLoss(EchoSeriesKSpace const &u, EchoSeriesKSpace const &v) -> double;

struct LossAndGrad
{
  double value = 0.0;
  EchoSeriesKSpace grad; // d/dRe v + i d/dIm v
};

auto SsduLossGrad(EchoSeriesKSpace const &u, EchoSeriesKSpace const &v) -> LossAndGrad;

} // namespace zs
