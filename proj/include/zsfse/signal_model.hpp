#pragma once

#include <vector>

#include <Eigen/Dense>

#include "zsfse/array.hpp"

namespace zs {

struct SequenceParams
{
  Index echoCount = 32;
  double echoSpacing = 8.0; // ms
  double refocusAngle = 160.0; // degrees, constant train
  double excitationAngle = 90.0; // degrees

  void validate() const;
};

struct TissueParams
{
  double t2 = 100.0; // ms
  double t1 = 1000.0; // ms
  double protonDensity = 1.0;

  void validate() const;
};

/*
 * FSE echo amplitudes via the extended phase graph recursion over (F+, F-, Z)
 * configuration states. CPMG: the refocusing axis is parallel to the
 * magnetisation after excitation, so echoes are real (and positive outside
 * the regime where T2 is a small multiple of the echo spacing, where T1
 * recovery can flip late echoes). Each echo interval is relax/shift, refocus,
 * relax/shift, then F0 is read out.
 */
auto EpgSimulate(SequenceParams const &seq, TissueParams const &tissue) -> Eigen::VectorXcd;

struct Dictionary
{
  Eigen::MatrixXcd atoms; // T x N
  std::vector<double> t2Grid; // ms, ascending
  double t1 = 1000.0;

  auto echoes() const -> Index { return atoms.rows(); }
  auto size() const -> Index { return atoms.cols(); }
};

/// N logarithmically spaced T2 values in [lo, hi] (ms).
auto LogSpacedT2Grid(double lo = 5.0, double hi = 400.0, Index n = 256) -> std::vector<double>;

auto BuildDictionary(SequenceParams const &seq, std::vector<double> const &t2Grid, double t1)
  -> Dictionary;

struct SubspaceBasis
{
  Eigen::MatrixXcd phi; // T x K, orthonormal columns
  Eigen::VectorXd singularValues; // all min(T, N), descending

  auto echoes() const -> Index { return phi.rows(); }
  auto rank() const -> Index { return phi.cols(); }
};

/// Top-k left singular vectors of the dictionary. Each vector's phase is fixed
/// so that its largest-magnitude entry is real and positive.
auto BuildSubspace(Dictionary const &q, Index k) -> SubspaceBasis;

/// ||Q - Phi Phi^H Q||_F / ||Q||_F
auto SubspaceRecoveryError(Dictionary const &q, SubspaceBasis const &basis) -> double;

/// Fraction of sum(sigma^2) captured by the first k singular values.
auto EnergyFraction(Eigen::VectorXd const &singularValues, Index k) -> double;

} // namespace zs
