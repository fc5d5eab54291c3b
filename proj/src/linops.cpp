#include "zsfse/linops.hpp"

#include <fmt/format.h>

#include "zsfse/fft.hpp"

namespace zs {

auto SamplingMask::select(std::vector<Index> const &echoList) const -> SamplingMask
{
  SamplingMask m(static_cast<Index>(echoList.size()), height());
  for (size_t i = 0; i < echoList.size(); i++) { m.lines.row(static_cast<Index>(i)) = lines.row(echoList[i]); }
  return m;
}

EchoSeriesKSpace::EchoSeriesKSpace(Index t, Index w, Index h, Index c, SamplingMask m)
  : echoes(static_cast<size_t>(t), CoilKSpace(c, w, h))
  , mask(std::move(m))
{
}

auto dotc(EchoSeriesKSpace const &a, EchoSeriesKSpace const &b) -> Cx
{
  Cx s{0.0, 0.0};
  for (Index t = 0; t < a.echoCount(); t++) { s += dotc(a[t], b[t]); }
  return s;
}

void axpy(Cx alpha, EchoSeriesKSpace const &x, EchoSeriesKSpace &y)
{
  for (Index t = 0; t < y.echoCount(); t++) { axpy(alpha, x[t], y[t]); }
}

namespace {

void ZeroUnsampled(CxImage &k, SamplingMask const &mask, Index t)
{
  for (Index ky = 0; ky < k.cols(); ky++) {
    if (!mask(t, ky)) { k.col(ky).setZero(); }
  }
}

void CheckMask(SamplingMask const &mask, Index t, Index h, char const *what)
{
  if (mask.echoes() != t || mask.height() != h) {
    throw ShapeError(fmt::format("{}: mask is {}x{}, expected {}x{}", what, mask.echoes(), mask.height(), t, h));
  }
}

template <typename A, typename B>
void CheckPlane(A const &a, B const &b, char const *what)
{
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError(fmt::format("{}: image size {}x{} vs {}x{}", what, a.width(), a.height(), b.width(), b.height()));
  }
}

} // namespace

auto ApplyMask(EchoSeriesKSpace const &y, SamplingMask const &mask) -> EchoSeriesKSpace
{
  CheckMask(mask, y.echoCount(), y.height(), "ApplyMask");
  EchoSeriesKSpace out = y;
  out.mask = mask;
  for (Index t = 0; t < out.echoCount(); t++) {
    for (auto &k : out[t].data) { ZeroUnsampled(k, mask, t); }
  }
  return out;
}

auto Expand(SubspaceBasis const &basis, CoeffMaps const &alpha) -> EchoImages
{
  if (alpha.size() != basis.rank()) {
    throw ShapeError(fmt::format("Expand: {} coefficient maps for rank {}", alpha.size(), basis.rank()));
  }
  EchoImages x(basis.echoes(), alpha.width(), alpha.height());
  for (Index t = 0; t < basis.echoes(); t++) {
    for (Index k = 0; k < basis.rank(); k++) { x[t] += basis.phi(t, k) * alpha[k]; }
  }
  return x;
}

auto Project(SubspaceBasis const &basis, EchoImages const &x) -> CoeffMaps
{
  if (x.size() != basis.echoes()) {
    throw ShapeError(fmt::format("Project: {} echoes for a {}-echo basis", x.size(), basis.echoes()));
  }
  CoeffMaps a(basis.rank(), x.width(), x.height());
  for (Index t = 0; t < basis.echoes(); t++) {
    for (Index k = 0; k < basis.rank(); k++) { a[k] += std::conj(basis.phi(t, k)) * x[t]; }
  }
  return a;
}

auto ForwardImages(EchoImages const &x, SensMaps const &sens, SamplingMask const &mask)
  -> EchoSeriesKSpace
{
  CheckPlane(x, sens, "ForwardImages");
  CheckMask(mask, x.size(), x.height(), "ForwardImages");
  EchoSeriesKSpace y(x.size(), x.width(), x.height(), sens.size(), mask);
  for (Index t = 0; t < x.size(); t++) {
    for (Index c = 0; c < sens.size(); c++) {
      CxImage &k = y[t][c];
      k = sens[c] * x[t];
      Fft2(k, false);
      ZeroUnsampled(k, mask, t);
    }
  }
  return y;
}

auto AdjointImages(EchoSeriesKSpace const &y, SensMaps const &sens, SamplingMask const &mask)
  -> EchoImages
{
  CheckPlane(y, sens, "AdjointImages");
  CheckMask(mask, y.echoCount(), y.height(), "AdjointImages");
  if (y.coils() != sens.size()) { throw ShapeError("AdjointImages: coil count mismatch"); }
  EchoImages x(y.echoCount(), y.width(), y.height());
  CxImage tmp;
  for (Index t = 0; t < y.echoCount(); t++) {
    for (Index c = 0; c < sens.size(); c++) {
      tmp = y[t][c];
      ZeroUnsampled(tmp, mask, t);
      Fft2(tmp, true);
      x[t] += sens[c].conjugate() * tmp;
    }
  }
  return x;
}

auto ForwardSubspace(CoeffMaps const &alpha, SubspaceBasis const &basis, SensMaps const &sens,
                     SamplingMask const &mask) -> EchoSeriesKSpace
{
  return ForwardImages(Expand(basis, alpha), sens, mask);
}

auto AdjointSubspace(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                     SamplingMask const &mask) -> CoeffMaps
{
  return Project(basis, AdjointImages(y, sens, mask));
}

auto ForwardSens(SensMaps const &sens, EchoImages const &x, SamplingMask const &mask)
  -> EchoSeriesKSpace
{
  return ForwardImages(x, sens, mask);
}

auto AdjointSens(EchoSeriesKSpace const &y, EchoImages const &x, SamplingMask const &mask)
  -> SensMaps
{
  CheckPlane(y, x, "AdjointSens");
  CheckMask(mask, y.echoCount(), y.height(), "AdjointSens");
  if (x.size() != y.echoCount()) { throw ShapeError("AdjointSens: echo count mismatch"); }
  SensMaps s(y.coils(), y.width(), y.height());
  CxImage tmp;
  for (Index t = 0; t < y.echoCount(); t++) {
    for (Index c = 0; c < y.coils(); c++) {
      tmp = y[t][c];
      ZeroUnsampled(tmp, mask, t);
      Fft2(tmp, true);
      s[c] += x[t].conjugate() * tmp;
    }
  }
  return s;
}

auto SpatialGradient(SensMaps const &s) -> GradientField
{
  Index const w = s.width(), h = s.height();
  GradientField g{SensMaps::zerosLike(s), SensMaps::zerosLike(s)};
  for (Index c = 0; c < s.size(); c++) {
    if (w > 1) { g.dw[c].topRows(w - 1) = s[c].bottomRows(w - 1) - s[c].topRows(w - 1); }
    if (h > 1) { g.dh[c].leftCols(h - 1) = s[c].rightCols(h - 1) - s[c].leftCols(h - 1); }
  }
  return g;
}

auto SpatialGradientAdjoint(GradientField const &g) -> SensMaps
{
  Index const w = g.dw.width(), h = g.dw.height();
  SensMaps s = SensMaps::zerosLike(g.dw);
  for (Index c = 0; c < s.size(); c++) {
    if (w > 1) {
      s[c].topRows(w - 1) -= g.dw[c].topRows(w - 1);
      s[c].bottomRows(w - 1) += g.dw[c].topRows(w - 1);
    }
    if (h > 1) {
      s[c].leftCols(h - 1) -= g.dh[c].leftCols(h - 1);
      s[c].rightCols(h - 1) += g.dh[c].leftCols(h - 1);
    }
  }
  return s;
}

auto dotc(GradientField const &a, GradientField const &b) -> Cx
{
  return dotc(a.dw, b.dw) + dotc(a.dh, b.dh);
}

TemporalKernel::TemporalKernel(Eigen::MatrixXcd const &u, SamplingMask const &mask)
  : rank_(u.cols())
  , q_(static_cast<size_t>(mask.height()))
{
  if (u.rows() != mask.echoes()) {
    throw ShapeError(fmt::format("TemporalKernel: {} echoes in factor, {} in mask", u.rows(), mask.echoes()));
  }
  for (Index ky = 0; ky < mask.height(); ky++) {
    Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(rank_, rank_);
    for (Index t = 0; t < mask.echoes(); t++) {
      if (mask(t, ky)) { q.noalias() += u.row(t).adjoint() * u.row(t); }
    }
    q_[static_cast<size_t>(ky)] = std::move(q);
  }
}

void TemporalKernel::apply(std::vector<CxImage> &g) const
{
  if (static_cast<Index>(g.size()) != rank_) { throw ShapeError("TemporalKernel: rank mismatch"); }
  if (g.empty()) { return; }
  Index const w = g.front().rows();
  Eigen::MatrixXcd cols(rank_, w), mixed(rank_, w);
  for (Index ky = 0; ky < static_cast<Index>(q_.size()); ky++) {
    auto const &q = q_[static_cast<size_t>(ky)];
    if (q.isZero(0.0)) {
      for (auto &im : g) { im.col(ky).setZero(); }
      continue;
    }
    for (Index r = 0; r < rank_; r++) { cols.row(r) = g[static_cast<size_t>(r)].col(ky).transpose(); }
    mixed.noalias() = q * cols;
    for (Index r = 0; r < rank_; r++) { g[static_cast<size_t>(r)].col(ky) = mixed.row(r).transpose(); }
  }
}

SubspaceNormal::SubspaceNormal(SubspaceBasis const &basis, SensMaps sens, SamplingMask const &mask)
  : sens_(std::move(sens))
  , kernel_(basis.phi, mask)
{
  if (mask.height() != sens_.height()) { throw ShapeError("SubspaceNormal: mask/sens height mismatch"); }
}

auto SubspaceNormal::operator()(CoeffMaps const &alpha) const -> CoeffMaps
{
  if (alpha.size() != kernel_.rank()) { throw ShapeError("SubspaceNormal: rank mismatch"); }
  CheckPlane(alpha, sens_, "SubspaceNormal");
  CoeffMaps out = CoeffMaps::zerosLike(alpha);
  std::vector<CxImage> g(static_cast<size_t>(alpha.size()));
  for (Index c = 0; c < sens_.size(); c++) {
    for (Index k = 0; k < alpha.size(); k++) {
      auto &gk = g[static_cast<size_t>(k)];
      gk = sens_[c] * alpha[k];
      FftH(gk, false);
    }
    kernel_.apply(g);
    for (Index k = 0; k < alpha.size(); k++) {
      auto &gk = g[static_cast<size_t>(k)];
      FftH(gk, true);
      out[k] += sens_[c].conjugate() * gk;
    }
  }
  return out;
}

ImagesNormal::ImagesNormal(SensMaps sens, SamplingMask mask)
  : sens_(std::move(sens))
  , mask_(std::move(mask))
{
  if (mask_.height() != sens_.height()) { throw ShapeError("ImagesNormal: mask/sens height mismatch"); }
}

auto ImagesNormal::operator()(EchoImages const &x) const -> EchoImages
{
  CheckMask(mask_, x.size(), x.height(), "ImagesNormal");
  CheckPlane(x, sens_, "ImagesNormal");
  EchoImages out = EchoImages::zerosLike(x);
  CxImage g;
  for (Index t = 0; t < x.size(); t++) {
    for (Index c = 0; c < sens_.size(); c++) {
      g = sens_[c] * x[t];
      FftH(g, false);
      ZeroUnsampled(g, mask_, t);
      FftH(g, true);
      out[t] += sens_[c].conjugate() * g;
    }
  }
  return out;
}

SensNormal::SensNormal(EchoImages const &x, SamplingMask const &mask)
{
  CheckMask(mask, x.size(), x.height(), "SensNormal");
  Index const n = x.width() * x.height();
  Eigen::MatrixXcd casorati(x.size(), n);
  for (Index t = 0; t < x.size(); t++) {
    casorati.row(t) = Eigen::Map<Eigen::RowVectorXcd const>(x[t].data(), n);
  }
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(casorati, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd const &sv = svd.singularValues();
  Index r = 0;
  while (r < sv.size() && sv[r] > 1e-14 * sv[0]) { r++; }
  r = std::max<Index>(r, 1);
  factors_.resize(static_cast<size_t>(r));
  for (Index i = 0; i < r; i++) {
    CxImage f(x.width(), x.height());
    Eigen::Map<Eigen::VectorXcd>(f.data(), n) = sv[i] * svd.matrixV().col(i).conjugate();
    factors_[static_cast<size_t>(i)] = std::move(f);
  }
  kernel_ = TemporalKernel(svd.matrixU().leftCols(r), mask);
}

auto SensNormal::operator()(SensMaps const &s) const -> SensMaps
{
  if (s.width() != factors_.front().rows() || s.height() != factors_.front().cols()) {
    throw ShapeError("SensNormal: map size does not match the echo images");
  }
  SensMaps out = SensMaps::zerosLike(s);
  std::vector<CxImage> g(factors_.size());
  for (Index c = 0; c < s.size(); c++) {
    for (size_t r = 0; r < factors_.size(); r++) {
      g[r] = factors_[r] * s[c];
      FftH(g[r], false);
    }
    kernel_.apply(g);
    for (size_t r = 0; r < factors_.size(); r++) {
      FftH(g[r], true);
      out[c] += factors_[r].conjugate() * g[r];
    }
  }
  return out;
}

} // namespace zs
