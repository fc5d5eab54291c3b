#include "zsfse/signal_model.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace zs {

void SequenceParams::validate() const
{
  if (echoCount < 1) { throw InvalidArgument("echo count must be >= 1"); }
  if (!(echoSpacing > 0.0)) { throw InvalidArgument("echo spacing must be positive"); }
  if (!(refocusAngle >= 0.0 && refocusAngle <= 180.0)) {
    throw InvalidArgument(fmt::format("refocusing angle {} outside [0, 180]", refocusAngle));
  }
  if (!(excitationAngle >= 0.0 && excitationAngle <= 180.0)) {
    throw InvalidArgument(fmt::format("excitation angle {} outside [0, 180]", excitationAngle));
  }
}

void TissueParams::validate() const
{
  if (!(t2 > 0.0)) { throw InvalidArgument(fmt::format("T2 must be positive, got {}", t2)); }
  if (!(t2 <= t1)) { throw InvalidArgument(fmt::format("T2 {} exceeds T1 {}", t2, t1)); }
  if (!(protonDensity >= 0.0)) { throw InvalidArgument("proton density must be >= 0"); }
}

namespace {

using Mat3 = Eigen::Matrix3cd;

// Transition matrix acting on (F+_k, F-_k, Z_k) for a pulse of flip angle a
// about an axis at phase p in the transverse plane.
auto RfMatrix(double a, double p) -> Mat3
{
  Cx const e = std::polar(1.0, p);
  Cx const i{0.0, 1.0};
  double const c2 = std::pow(std::cos(a / 2), 2);
  double const s2 = std::pow(std::sin(a / 2), 2);
  double const s = std::sin(a);
  Mat3 t;
  t << c2, e * e * s2, -i * e * s, //
    std::conj(e * e) * s2, c2, i * std::conj(e) * s, //
    -0.5 * i * std::conj(e) * s, 0.5 * i * e * s, std::cos(a);
  return t;
}

struct States
{
  Eigen::VectorXcd fp, fm, z;

  explicit States(Index n)
    : fp(Eigen::VectorXcd::Zero(n))
    , fm(Eigen::VectorXcd::Zero(n))
    , z(Eigen::VectorXcd::Zero(n))
  {
  }

  void rf(Mat3 const &t)
  {
    for (Index k = 0; k < fp.size(); k++) {
      Eigen::Vector3cd const v = t * Eigen::Vector3cd(fp[k], fm[k], z[k]);
      fp[k] = v[0];
      fm[k] = v[1];
      z[k] = v[2];
    }
  }

  void relax(double e1, double e2)
  {
    fp *= e2;
    fm *= e2;
    z *= e1;
    z[0] += 1.0 - e1;
  }

  // Unit dephasing: F+ orders move up, F- orders move down, F-_0 wraps into
  // F+_0. The highest order falls off the end.
  void shift()
  {
    Index const n = fp.size();
    for (Index k = n - 1; k > 0; k--) { fp[k] = fp[k - 1]; }
    for (Index k = 0; k < n - 1; k++) { fm[k] = fm[k + 1]; }
    fm[n - 1] = 0.0;
    fp[0] = std::conj(fm[0]);
  }
};

} // namespace

auto EpgSimulate(SequenceParams const &seq, TissueParams const &tissue) -> Eigen::VectorXcd
{
  seq.validate();
  tissue.validate();
  double const deg = std::numbers::pi / 180.0;
  double const half = seq.echoSpacing / 2.0;
  double const e1 = std::exp(-half / tissue.t1);
  double const e2 = std::exp(-half / tissue.t2);

  // A configuration of order > T + 1 cannot return to order 0 before the last echo.
  States st(seq.echoCount + 2);
  st.z[0] = 1.0;
  st.rf(RfMatrix(seq.excitationAngle * deg, std::numbers::pi / 2));
  Mat3 const refocus = RfMatrix(seq.refocusAngle * deg, 0.0);

  Eigen::VectorXcd echoes(seq.echoCount);
  for (Index t = 0; t < seq.echoCount; t++) {
    st.relax(e1, e2);
    st.shift();
    st.rf(refocus);
    st.relax(e1, e2);
    st.shift();
    echoes[t] = st.fp[0] * tissue.protonDensity;
  }
  return echoes;
}

auto LogSpacedT2Grid(double lo, double hi, Index n) -> std::vector<double>
{
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) { throw InvalidArgument("invalid T2 grid range"); }
  std::vector<double> g(static_cast<size_t>(n));
  for (Index j = 0; j < n; j++) {
    double const f = n == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n - 1);
    g[static_cast<size_t>(j)] = lo * std::pow(hi / lo, f);
  }
  g.back() = hi;
  return g;
}

auto BuildDictionary(SequenceParams const &seq, std::vector<double> const &t2Grid, double t1)
  -> Dictionary
{
  if (t2Grid.empty()) { throw InvalidArgument("empty T2 grid"); }
  for (size_t j = 1; j < t2Grid.size(); j++) {
    if (!(t2Grid[j] >= t2Grid[j - 1])) { throw InvalidArgument("T2 grid must be ascending"); }
  }
  Dictionary d;
  d.t2Grid = t2Grid;
  d.t1 = t1;
  d.atoms.resize(seq.echoCount, static_cast<Index>(t2Grid.size()));
  for (size_t j = 0; j < t2Grid.size(); j++) {
    d.atoms.col(static_cast<Index>(j)) = EpgSimulate(seq, TissueParams{t2Grid[j], t1, 1.0});
  }
  return d;
}

auto BuildSubspace(Dictionary const &q, Index k) -> SubspaceBasis
{
  Index const m = std::min(q.echoes(), q.size());
  if (k < 1 || k > m) { throw InvalidArgument(fmt::format("subspace rank {} outside [1, {}]", k, m)); }
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(q.atoms, Eigen::ComputeThinU);
  SubspaceBasis b;
  b.singularValues = svd.singularValues();
  b.phi = svd.matrixU().leftCols(k);
  for (Index c = 0; c < k; c++) {
    Index imax = 0;
    b.phi.col(c).cwiseAbs().maxCoeff(&imax);
    Cx const p = b.phi(imax, c);
    if (std::abs(p) > 0.0) { b.phi.col(c) *= std::conj(p) / std::abs(p); }
  }
  return b;
}

auto SubspaceRecoveryError(Dictionary const &q, SubspaceBasis const &basis) -> double
{
  if (basis.echoes() != q.echoes()) {
    throw ShapeError(fmt::format("basis has {} echoes, dictionary {}", basis.echoes(), q.echoes()));
  }
  Eigen::MatrixXcd const proj = basis.phi * (basis.phi.adjoint() * q.atoms);
  return (q.atoms - proj).norm() / q.atoms.norm();
}

auto EnergyFraction(Eigen::VectorXd const &singularValues, Index k) -> double
{
  if (k < 0 || k > singularValues.size()) { throw InvalidArgument("energy rank out of range"); }
  double const total = singularValues.squaredNorm();
  return singularValues.head(k).squaredNorm() / total;
}

} // namespace zs
