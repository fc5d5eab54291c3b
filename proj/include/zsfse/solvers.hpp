#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <vector>

#include <fmt/format.h>

#include "zsfse/linops.hpp"

namespace zs {

struct CgConfig
{
  Index maxIters = 15;
  double tolerance = 1e-6; // relative residual ||r|| / ||rhs||

  void validate() const
  {
    if (maxIters < 1) { throw InvalidArgument("CG needs at least one iteration"); }
    if (!(tolerance > 0.0)) { throw InvalidArgument("CG tolerance must be positive"); }
  }
};

template <typename V>
struct CgResult
{
  V x;
  std::vector<double> residuals; // relative 2-norm residual, entry 0 is the start point
  Index iterations = 0;
};

/*
 * Conjugate gradients for op(x) = rhs with op Hermitian positive
 * (semi)definite. V needs dotc/axpy/allFinite overloads and a copy
 * constructor; op maps V -> V.
 */
template <typename V, typename Op>
auto CgSolve(Op const &op, V const &rhs, CgConfig const &cfg, V const *x0 = nullptr) -> CgResult<V>
{
  cfg.validate();
  if (!allFinite(rhs)) { throw NumericalError("CG: non-finite right-hand side"); }
  CgResult<V> res;
  double const bnorm = norm2(rhs);
  V r = rhs;
  if (x0) {
    res.x = *x0;
    V const ax = op(res.x);
    axpy(Cx{-1.0}, ax, r);
  } else {
    res.x = rhs;
    res.x *= 0.0;
  }
  if (bnorm == 0.0 && !x0) {
    res.residuals.push_back(0.0);
    return res;
  }
  double const scale = bnorm > 0.0 ? bnorm : 1.0;
  double rr = dotc(r, r).real();
  res.residuals.push_back(std::sqrt(rr) / scale);
  if (res.residuals.back() <= cfg.tolerance) { return res; }
  V p = r;
  for (Index it = 0; it < cfg.maxIters; it++) {
    V const ap = op(p);
    double const pap = dotc(p, ap).real();
    if (!std::isfinite(pap)) { throw NumericalError("CG: non-finite curvature"); }
    if (pap <= 0.0) {
      throw NumericalError(fmt::format("CG breakdown at iteration {}: p^H A p = {}", it, pap));
    }
    double const a = rr / pap;
    axpy(Cx{a}, p, res.x);
    axpy(Cx{-a}, ap, r);
    double const rrNew = dotc(r, r).real();
    if (!std::isfinite(rrNew)) { throw NumericalError("CG: non-finite residual"); }
    res.iterations = it + 1;
    res.residuals.push_back(std::sqrt(rrNew) / scale);
    if (res.residuals.back() <= cfg.tolerance) { break; }
    double const b = rrNew / rr;
    rr = rrNew;
    p *= b;
    p += r;
  }
  return res;
}

void WriteResidualCsv(std::ostream &os, std::vector<double> const &residuals);

/// Precomputed operator context for the image-side data-consistency solve.
struct ImageDcContext
{
  SubspaceNormal normal;
  CoeffMaps adjointData; // A^H y

  ImageDcContext(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                 SamplingMask const &mask);
};

/// (A^H A + mu I) alpha = A^H y + mu z, warm-started at z.
auto DcSolveImage(ImageDcContext const &ctx, CoeffMaps const &z, double mu, CgConfig const &cfg)
  -> CgResult<CoeffMaps>;

/// Convenience form that builds the context from its parts.
auto DcSolveImage(EchoSeriesKSpace const &y, CoeffMaps const &z, double mu,
                  SubspaceBasis const &basis, SensMaps const &sens, SamplingMask const &mask,
                  CgConfig const &cfg) -> CoeffMaps;

struct SensDcContext
{
  SensNormal normal;
  SensMaps adjointData; // B^H y

  SensDcContext(EchoSeriesKSpace const &y, EchoImages const &x, SamplingMask const &mask);
};

/// (B^H B + mu I + lambda D^H D) S = B^H y + mu z, warm-started at z.
auto DcSolveSens(SensDcContext const &ctx, SensMaps const &z, double mu, double lambda,
                 CgConfig const &cfg) -> CgResult<SensMaps>;

auto DcSolveSens(EchoSeriesKSpace const &y, SensMaps const &z, EchoImages const &x, double mu,
                 double lambda, SamplingMask const &mask, CgConfig const &cfg) -> SensMaps;

/// Same per-echo solve without the temporal model: (A^H A + mu I) x = A^H y + mu z.
struct ImagesDcContext
{
  ImagesNormal normal;
  EchoImages adjointData;

  ImagesDcContext(EchoSeriesKSpace const &y, SensMaps const &sens, SamplingMask const &mask);
};

auto DcSolveImages(ImagesDcContext const &ctx, EchoImages const &z, double mu, CgConfig const &cfg)
  -> CgResult<EchoImages>;

// Orthogonal Daubechies-4 (8-tap) separable 2D wavelet with periodic
// extension. Coefficients are stored in place, coarse band top-left.
auto Dwt2(CxImage const &img, Index levels) -> CxImage;
auto Idwt2(CxImage const &coeffs, Index levels) -> CxImage;

inline auto SoftThreshold(Cx v, double lambda) -> Cx
{
  double const m = std::abs(v);
  return m > lambda ? v * ((m - lambda) / m) : Cx{0.0, 0.0};
}

struct FistaConfig
{
  Index maxIters = 200;
  double l1Weight = 1e-3; // mu in ||y - A alpha||^2 + mu sum_k ||W alpha_k||_1
  double stepSize = 0.0; // <= 0 selects 1 / L from power iteration
  Index levels = 3;

  void validate() const;
};

struct FistaResult
{
  CoeffMaps alpha;
  std::vector<double> objective; // entry 0 is alpha = 0
};

auto FistaL1Wavelet(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                    SamplingMask const &mask, FistaConfig const &cfg) -> FistaResult;

/// Largest eigenvalue of a Hermitian PSD operator by power iteration.
auto PowerIteration(std::function<CoeffMaps(CoeffMaps const &)> const &op, CoeffMaps start,
                    Index iters) -> double;

} // namespace zs
