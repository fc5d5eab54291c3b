#pragma once

#include <vector>

#include "zsfse/array.hpp"
#include "zsfse/signal_model.hpp"

namespace zs {

/// Acquired phase-encode (ky) lines per echo, [T, H]. A marked (t, ky)
/// acquires the full kx readout for that echo.
struct SamplingMask
{
  Image<bool> lines;

  SamplingMask() = default;
  SamplingMask(Index echoes, Index height, bool value = false)
    : lines(Image<bool>::Constant(echoes, height, value))
  {
  }

  auto echoes() const -> Index { return lines.rows(); }
  auto height() const -> Index { return lines.cols(); }
  auto operator()(Index t, Index ky) const -> bool { return lines(t, ky); }
  auto count(Index t) const -> Index { return lines.row(t).count(); }
  auto total() const -> Index { return lines.count(); }

  /// Rows for a subset of echoes, in the given order.
  auto select(std::vector<Index> const &echoList) const -> SamplingMask;

  friend auto operator==(SamplingMask const &a, SamplingMask const &b) -> bool
  {
    return a.lines.rows() == b.lines.rows() && a.lines.cols() == b.lines.cols() &&
           (a.lines == b.lines).all();
  }
};

struct KCoilTag;
/// Per-echo coil k-space, [C, W, H].
using CoilKSpace = Stack<KCoilTag>;

/// Multi-echo, multi-coil k-space [T, W, H, C] together with its sampling
/// mask. Stored echo-major; data is zero wherever the mask is false.
struct EchoSeriesKSpace
{
  std::vector<CoilKSpace> echoes;
  SamplingMask mask;

  EchoSeriesKSpace() = default;
  EchoSeriesKSpace(Index t, Index w, Index h, Index c, SamplingMask m);

  auto echoCount() const -> Index { return static_cast<Index>(echoes.size()); }
  auto coils() const -> Index { return echoes.empty() ? 0 : echoes.front().size(); }
  auto width() const -> Index { return echoes.empty() ? 0 : echoes.front().width(); }
  auto height() const -> Index { return echoes.empty() ? 0 : echoes.front().height(); }

  auto operator[](Index t) -> CoilKSpace & { return echoes[static_cast<size_t>(t)]; }
  auto operator[](Index t) const -> CoilKSpace const & { return echoes[static_cast<size_t>(t)]; }
};

auto dotc(EchoSeriesKSpace const &a, EchoSeriesKSpace const &b) -> Cx;
void axpy(Cx alpha, EchoSeriesKSpace const &x, EchoSeriesKSpace &y);

/// Zero every unsampled (t, ky) column; returns data carrying the new mask.
auto ApplyMask(EchoSeriesKSpace const &y, SamplingMask const &mask) -> EchoSeriesKSpace;

/// X_T = Phi alpha.
auto Expand(SubspaceBasis const &basis, CoeffMaps const &alpha) -> EchoImages;
/// alpha = Phi^H X_T.
auto Project(SubspaceBasis const &basis, EchoImages const &x) -> CoeffMaps;

// A = M F S Phi and its adjoint.
auto ForwardSubspace(CoeffMaps const &alpha, SubspaceBasis const &basis, SensMaps const &sens,
                     SamplingMask const &mask) -> EchoSeriesKSpace;
auto AdjointSubspace(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                     SamplingMask const &mask) -> CoeffMaps;

// A = M F S applied echo by echo, no temporal model.
auto ForwardImages(EchoImages const &x, SensMaps const &sens, SamplingMask const &mask)
  -> EchoSeriesKSpace;
auto AdjointImages(EchoSeriesKSpace const &y, SensMaps const &sens, SamplingMask const &mask)
  -> EchoImages;

// B = M F X_T, linear in the sensitivity maps for fixed echo images.
auto ForwardSens(SensMaps const &sens, EchoImages const &x, SamplingMask const &mask)
  -> EchoSeriesKSpace;
auto AdjointSens(EchoSeriesKSpace const &y, EchoImages const &x, SamplingMask const &mask)
  -> SensMaps;

/// Forward differences along width and height; the last difference on each
/// axis is zero.
struct GradientField
{
  SensMaps dw;
  SensMaps dh;
};

auto SpatialGradient(SensMaps const &s) -> GradientField;
auto SpatialGradientAdjoint(GradientField const &g) -> SensMaps;
auto dotc(GradientField const &a, GradientField const &b) -> Cx;

/*
 * Per-ky temporal kernels. With kx fully sampled F^H M_t F = F_ky^H M_t F_ky,
 * so a normal operator of the form sum_t u_t^* (F^H M_t F) u_t collapses to an
 * R x R Hermitian mixing matrix per ky column:
 *   Q[ky](r', r) = sum_t conj(U(t, r')) M(t, ky) U(t, r)
 */
class TemporalKernel
{
public:
  TemporalKernel() = default;
  TemporalKernel(Eigen::MatrixXcd const &u, SamplingMask const &mask);

  auto rank() const -> Index { return rank_; }
  /// In-place mixing of R ky-transformed images.
  void apply(std::vector<CxImage> &g) const;

private:
  Index rank_ = 0;
  std::vector<Eigen::MatrixXcd> q_; // one R x R per ky
};

/// A^H A for A = M F S Phi.
class SubspaceNormal
{
public:
  SubspaceNormal(SubspaceBasis const &basis, SensMaps sens, SamplingMask const &mask);
  auto operator()(CoeffMaps const &alpha) const -> CoeffMaps;

private:
  SensMaps sens_;
  TemporalKernel kernel_;
};

/// A^H A for the echo-by-echo operator M F S.
class ImagesNormal
{
public:
  ImagesNormal(SensMaps sens, SamplingMask mask);
  auto operator()(EchoImages const &x) const -> EchoImages;

private:
  SensMaps sens_;
  SamplingMask mask_;
};

/// B^H B for B = M F X_T. X_T is factored once through a thin SVD of its
/// Casorati matrix so the cost scales with its numerical rank, not with T.
class SensNormal
{
public:
  SensNormal(EchoImages const &x, SamplingMask const &mask);
  auto operator()(SensMaps const &s) const -> SensMaps;
  auto factorRank() const -> Index { return static_cast<Index>(factors_.size()); }

private:
  std::vector<CxImage> factors_;
  TemporalKernel kernel_;
};

} // namespace zs
