#pragma once

#include <numbers>
#include <random>

#include "zsfse/masking.hpp"
#include "zsfse/phantom.hpp"
#include "zsfse/signal_model.hpp"

namespace zs::test {

template <typename Tag>
auto RandomStack(Index n, Index w, Index h, std::mt19937_64 &rng) -> Stack<Tag>
{
  std::normal_distribution<double> nd;
  Stack<Tag> s(n, w, h);
  for (auto &im : s.data) {
    for (Index i = 0; i < im.size(); i++) { im.data()[i] = Cx{nd(rng), nd(rng)}; }
  }
  return s;
}

inline auto RandomVector(Index n, std::mt19937_64 &rng) -> Eigen::VectorXcd
{
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(n);
  for (Index i = 0; i < n; i++) { v[i] = Cx{nd(rng), nd(rng)}; }
  return v;
}

inline auto RandomKSpace(Index t, Index w, Index h, Index c, SamplingMask const &mask, std::mt19937_64 &rng)
  -> EchoSeriesKSpace
{
  EchoSeriesKSpace y(t, w, h, c, mask);
  for (auto &e : y.echoes) { e = RandomStack<KCoilTag>(c, w, h, rng); }
  return ApplyMask(y, mask);
}

inline auto RandomMask(Index t, Index h, double p, std::mt19937_64 &rng) -> SamplingMask
{
  std::bernoulli_distribution b(p);
  SamplingMask m(t, h);
  for (Index i = 0; i < m.lines.size(); i++) { m.lines.data()[i] = b(rng); }
  return m;
}

/// A small but complete simulated problem.
struct Problem
{
  SequenceParams seq;
  Dictionary dict;
  SubspaceBasis basis;
  Phantom phantom;
  SensMaps sens;
  SimulatedScan scan;
  SamplingMask mask;
  EchoSeriesKSpace y;
};

struct ProblemSpec
{
  Index echoes = 6;
  Index rank = 2;
  Index size = 12;
  Index coils = 2;
  Index lines = 6;
  Index acs = 2;
  double noise = 0.0; // fraction of max |Y|
  std::uint64_t seed = 1;
  double esp = 10.0;
};

inline auto MakeProblem(ProblemSpec const &s) -> Problem
{
  Problem p;
  p.seq.echoCount = s.echoes;
  p.seq.echoSpacing = s.esp;
  p.dict = BuildDictionary(p.seq, LogSpacedT2Grid(5.0, 400.0, 64), 1000.0);
  p.basis = BuildSubspace(p.dict, s.rank);
  p.phantom = MakePhantom(s.size, s.size, s.seed);
  p.sens = MakeSensMaps(s.coils, s.size, s.size, s.seed + 11);
  double sigma = 0.0;
  if (s.noise > 0.0) {
    sigma = s.noise * MaxKSpaceMagnitude(SimulateKSpace(p.phantom, p.seq, p.sens, 0.0, 0).kspace);
  }
  p.scan = SimulateKSpace(p.phantom, p.seq, p.sens, sigma, s.seed + 23);
  AcqSpec acq;
  acq.linesPerEcho = s.lines;
  acq.centerLines = s.acs;
  acq.height = s.size;
  acq.echoes = s.echoes;
  acq.seed = s.seed + 37;
  p.mask = GenShufflingMask(acq);
  p.y = ApplyMask(p.scan.kspace, p.mask);
  return p;
}

// Dense oracles. Vectorisation is stack-major, then row-major within each
// W x H image (index x * H + y); k-space is echo-major, then coil.

template <typename Tag>
auto Flatten(Stack<Tag> const &s) -> Eigen::VectorXcd
{
  Index const p = s.width() * s.height();
  Eigen::VectorXcd v(s.size() * p);
  for (Index i = 0; i < s.size(); i++) { v.segment(i * p, p) = Eigen::Map<Eigen::VectorXcd const>(s[i].data(), p); }
  return v;
}

template <typename Tag>
auto Unflatten(Eigen::VectorXcd const &v, Index n, Index w, Index h) -> Stack<Tag>
{
  Stack<Tag> s(n, w, h);
  for (Index i = 0; i < n; i++) { Eigen::Map<Eigen::VectorXcd>(s[i].data(), w * h) = v.segment(i * w * h, w * h); }
  return s;
}

inline auto Flatten(EchoSeriesKSpace const &y) -> Eigen::VectorXcd
{
  Index const block = y.coils() * y.width() * y.height();
  Eigen::VectorXcd v(y.echoCount() * block);
  for (Index t = 0; t < y.echoCount(); t++) { v.segment(t * block, block) = Flatten(y[t]); }
  return v;
}

/// exp(-2 pi i (k - c)(x - c) / n) / sqrt(n), c = n / 2.
inline auto CenteredDftMatrix(Index n) -> Eigen::MatrixXcd
{
  Eigen::MatrixXcd f(n, n);
  double const c = static_cast<double>(n / 2);
  for (Index k = 0; k < n; k++) {
    for (Index x = 0; x < n; x++) {
      double const ph = -2.0 * std::numbers::pi * (static_cast<double>(k) - c) * (static_cast<double>(x) - c) /
                        static_cast<double>(n);
      f(k, x) = std::polar(1.0 / std::sqrt(static_cast<double>(n)), ph);
    }
  }
  return f;
}

/// 2D centred DFT on a row-major W x H image: Fw (x) Fh.
inline auto Dft2Matrix(Index w, Index h) -> Eigen::MatrixXcd
{
  Eigen::MatrixXcd const fw = CenteredDftMatrix(w), fh = CenteredDftMatrix(h);
  Eigen::MatrixXcd f(w * h, w * h);
  for (Index a = 0; a < w; a++) {
    for (Index b = 0; b < w; b++) { f.block(a * h, b * h, h, h) = fw(a, b) * fh; }
  }
  return f;
}

inline auto MaskDiagonal(SamplingMask const &m, Index t, Index w) -> Eigen::VectorXcd
{
  Index const h = m.height();
  Eigen::VectorXcd d(w * h);
  for (Index x = 0; x < w; x++) {
    for (Index y = 0; y < h; y++) { d[x * h + y] = m(t, y) ? 1.0 : 0.0; }
  }
  return d;
}

/// Explicit M F S Phi, (T C W H) x (K W H).
inline auto DenseSubspaceOperator(SubspaceBasis const &basis, SensMaps const &sens, SamplingMask const &mask)
  -> Eigen::MatrixXcd
{
  Index const t = basis.echoes(), k = basis.rank(), c = sens.size(), w = sens.width(), h = sens.height();
  Index const p = w * h;
  Eigen::MatrixXcd const f = Dft2Matrix(w, h);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(t * c * p, k * p);
  for (Index ti = 0; ti < t; ti++) {
    Eigen::VectorXcd const m = MaskDiagonal(mask, ti, w);
    for (Index ci = 0; ci < c; ci++) {
      Eigen::MatrixXcd const mfs =
        m.asDiagonal() * f * Eigen::Map<Eigen::VectorXcd const>(sens[ci].data(), p).asDiagonal();
      for (Index ki = 0; ki < k; ki++) { a.block((ti * c + ci) * p, ki * p, p, p) = basis.phi(ti, ki) * mfs; }
    }
  }
  return a;
}

/// Explicit M F X_T acting on coil maps, (T C W H) x (C W H).
inline auto DenseSensOperator(EchoImages const &x, Index coils, SamplingMask const &mask) -> Eigen::MatrixXcd
{
  Index const t = x.size(), w = x.width(), h = x.height(), p = w * h;
  Eigen::MatrixXcd const f = Dft2Matrix(w, h);
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(t * coils * p, coils * p);
  for (Index ti = 0; ti < t; ti++) {
    Eigen::MatrixXcd const mfx = MaskDiagonal(mask, ti, w).asDiagonal() * f *
                                 Eigen::Map<Eigen::VectorXcd const>(x[ti].data(), p).asDiagonal();
    for (Index ci = 0; ci < coils; ci++) { b.block((ti * coils + ci) * p, ci * p, p, p) = mfx; }
  }
  return b;
}

/// Explicit forward differences for one W x H image, rows [dw; dh].
inline auto DenseGradient(Index w, Index h) -> Eigen::MatrixXd
{
  Index const p = w * h;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * p, p);
  for (Index x = 0; x < w; x++) {
    for (Index y = 0; y < h; y++) {
      Index const i = x * h + y;
      if (x + 1 < w) {
        d(i, i + h) = 1.0;
        d(i, i) = -1.0;
      }
      if (y + 1 < h) {
        d(p + i, i + 1) = 1.0;
        d(p + i, i) = -1.0;
      }
    }
  }
  return d;
}

/// |<Ax, y> - <x, A^H y>| relative to ||Ax|| ||y||.
inline auto AdjointGap(Cx lhs, Cx rhs, double scale) -> double { return std::abs(lhs - rhs) / scale; }

inline auto RandomBasis(Index t, Index k, std::mt19937_64 &rng) -> SubspaceBasis
{
  Eigen::MatrixXcd m(t, k);
  for (Index j = 0; j < k; j++) { m.col(j) = RandomVector(t, rng); }
  SubspaceBasis b;
  b.phi = Eigen::HouseholderQR<Eigen::MatrixXcd>(m).householderQ() * Eigen::MatrixXcd::Identity(t, k);
  return b;
}

/// Random Hermitian PSD G^H G / n + shift I.
inline auto RandomHpd(Index n, double shift, std::mt19937_64 &rng) -> Eigen::MatrixXcd
{
  Eigen::MatrixXcd g(n, n);
  for (Index j = 0; j < n; j++) { g.col(j) = RandomVector(n, rng); }
  return g.adjoint() * g / static_cast<double>(2 * n) + shift * Eigen::MatrixXcd::Identity(n, n);
}

inline auto Dense(Eigen::MatrixXcd const &a)
{
  return [&a](Eigen::VectorXcd const &x) -> Eigen::VectorXcd { return a * x; };
}


/*
 * Brute-force isochromat oracle. N spins spread uniformly over one full
 * cycle of crusher dephasing per half echo spacing; each spin is rotated and
 * relaxed as a 3-vector. The echo is the ensemble mean transverse
 * magnetisation along the excitation axis (-y), signed: very short T2 lets
 * T1 recovery push late echoes below zero.
 */
inline auto Isochromats(SequenceParams const &seq, double t2, double t1, Index n) -> Eigen::VectorXd
{
  double const deg = std::numbers::pi / 180.0;
  double const half = seq.echoSpacing / 2.0;
  double const e2 = std::exp(-half / t2), e1 = std::exp(-half / t1);
  double const ex = seq.excitationAngle * deg, rf = seq.refocusAngle * deg;

  std::vector<Eigen::Vector3d> m(static_cast<size_t>(n));
  for (auto &v : m) {
    // Excitation about x from equilibrium.
    v = Eigen::Vector3d(0.0, -std::sin(ex), std::cos(ex));
  }
  Eigen::Matrix3d ry;
  ry << std::cos(rf), 0.0, std::sin(rf), 0.0, 1.0, 0.0, -std::sin(rf), 0.0, std::cos(rf);

  auto freeSpin = [&](Eigen::Vector3d &v, double phi) {
    double const c = std::cos(phi), s = std::sin(phi);
    Eigen::Vector3d const r(c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z());
    v = Eigen::Vector3d(r.x() * e2, r.y() * e2, r.z() * e1 + (1.0 - e1));
  };

  Eigen::VectorXd echoes(seq.echoCount);
  for (Index t = 0; t < seq.echoCount; t++) {
    double sum = 0.0;
    for (Index j = 0; j < n; j++) {
      double const phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
      auto &v = m[static_cast<size_t>(j)];
      freeSpin(v, phi);
      v = ry * v;
      freeSpin(v, phi);
      sum -= v.y();
    }
    echoes[t] = sum / static_cast<double>(n);
  }
  return echoes;
}

} // namespace zs::test
