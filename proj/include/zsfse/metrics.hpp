#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "zsfse/linops.hpp"
#include "zsfse/signal_model.hpp"

namespace zs {

/// 100 * || |est| - |ref| ||^2 / || |ref| ||^2 over all echoes jointly.
auto Nmse(EchoImages const &est, EchoImages const &ref) -> double;

struct SsimConfig
{
  Index window = 11; // clamped to the largest odd size that fits the image
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Gaussian-window SSIM with dynamic range max(ref), averaged over the pixels
/// where the whole window fits.
auto Ssim(ReImage const &est, ReImage const &ref, SsimConfig const &cfg = {}) -> double;
/// Mean SSIM of the echo magnitudes.
auto SsimSeries(EchoImages const &est, EchoImages const &ref, SsimConfig const &cfg = {}) -> double;

/// Dictionary matching on magnitudes: per support pixel the T2 of the atom
/// with the largest normalised inner product; 0 elsewhere.
auto FitT2Map(EchoImages const &x, Dictionary const &dict, BoolImage const &support) -> ReImage;

/// Percent squared error of a T2 map over pixels where mask is set.
auto NmseT2(ReImage const &est, ReImage const &ref, BoolImage const &mask) -> double;

/// Support pixels whose PD exceeds `fraction` of the maximum PD.
auto T2ScoringMask(ReImage const &pd, BoolImage const &support, double fraction = 0.1) -> BoolImage;

/*
 * Coil-map error invariant to the ambiguities the forward model cannot
 * resolve: each pixel of `est` is rescaled to unit root-sum-of-squares and
 * rotated by the common phase that best aligns it with `ref`. Returns the
 * relative Frobenius error over `support`.
 */
auto SensMapError(SensMaps const &est, SensMaps const &ref, BoolImage const &support) -> double;

/// Total variation (sum of gradient magnitudes) across coils.
auto SensTotalVariation(SensMaps const &s) -> double;

struct MetricReport
{
  std::string method;
  double nmseI = 0.0; // percent
  double ssimI = 0.0;
  double nmseT2 = 0.0; // percent
  std::vector<double> echoNmse;
  std::vector<double> echoSsim;
  std::string configDigest;
};

struct EvalTruth
{
  EchoImages images;
  ReImage t2;
  ReImage pd;
  BoolImage support;
};

auto Evaluate(std::string method, EchoImages const &est, EvalTruth const &truth, Dictionary const &dict)
  -> MetricReport;

void WriteSummaryCsv(std::ostream &os, std::vector<MetricReport> const &reports);
void WritePerEchoCsv(std::ostream &os, std::vector<MetricReport> const &reports);

} // namespace zs
