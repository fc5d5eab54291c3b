#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "zsfse/fft.hpp"
#include "zsfse/solvers.hpp"

using namespace zs;
using namespace zs::test;

TEST(Cg, IdentityConvergesInOneStep)
{
  std::mt19937_64 rng(1);
  Eigen::VectorXcd const b = RandomVector(20, rng);
  auto const r = CgSolve([](Eigen::VectorXcd const &x) -> Eigen::VectorXcd { return x; }, b, CgConfig{15, 1e-12});
  EXPECT_EQ(r.iterations, 1);
  EXPECT_LT((r.x - b).norm(), 1e-14 * b.norm());
}

TEST(Cg, DiagonalOperator)
{
  std::mt19937_64 rng(2);
  Index const n = 64;
  Eigen::VectorXd const d = Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
  Eigen::VectorXcd const b = RandomVector(n, rng);
  auto const r = CgSolve([&](Eigen::VectorXcd const &x) -> Eigen::VectorXcd { return d.cast<Cx>().cwiseProduct(x); },
                         b, CgConfig{200, 1e-14});
  Eigen::VectorXcd const ref = b.cwiseQuotient(d.cast<Cx>());
  EXPECT_LT((r.x - ref).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Cg, MatchesDenseSolve)
{
  std::mt19937_64 rng(3);
  for (Index n : {32, 128, 512}) {
    Eigen::MatrixXcd const a = RandomHpd(n, 0.05, rng);
    Eigen::VectorXcd const b = RandomVector(n, rng);
    Eigen::VectorXcd const ref = a.ldlt().solve(b);
    auto const r = CgSolve(Dense(a), b, CgConfig{2000, 1e-12});
    EXPECT_LT((r.x - ref).norm() / ref.norm(), 1e-6) << "n = " << n;
  }
}

TEST(Cg, ResidualDropsTenfold)
{
  std::mt19937_64 rng(4);
  Eigen::MatrixXcd const a = RandomHpd(64, 0.5, rng);
  Eigen::VectorXcd const b = RandomVector(64, rng);
  auto const r = CgSolve(Dense(a), b, CgConfig{15, 1e-12});
  EXPECT_DOUBLE_EQ(r.residuals.front(), 1.0);
  EXPECT_LT(r.residuals.back(), 0.1);
}

TEST(Cg, EnergyNormErrorMonotone)
{
  std::mt19937_64 rng(5);
  Eigen::MatrixXcd const a = RandomHpd(48, 0.05, rng);
  Eigen::VectorXcd const b = RandomVector(48, rng);
  Eigen::VectorXcd const ref = a.ldlt().solve(b);
  double prev = std::numeric_limits<double>::infinity();
  for (Index it = 1; it <= 30; it++) {
    auto const r = CgSolve(Dense(a), b, CgConfig{it, 1e-300});
    Eigen::VectorXcd const e = r.x - ref;
    double const en = e.dot(a * e).real();
    EXPECT_LE(en, prev * (1.0 + 1e-9)) << it;
    prev = en;
  }
}

TEST(Cg, WarmStartAtSolution)
{
  std::mt19937_64 rng(6);
  Eigen::MatrixXcd const a = RandomHpd(16, 0.5, rng);
  Eigen::VectorXcd const b = RandomVector(16, rng);
  Eigen::VectorXcd const x0 = a.ldlt().solve(b);
  auto const r = CgSolve(Dense(a), b, CgConfig{15, 1e-8}, &x0);
  EXPECT_EQ(r.iterations, 0);
}

TEST(Cg, RejectsIndefiniteAndNonFinite)
{
  Eigen::VectorXcd b = Eigen::VectorXcd::Ones(4);
  EXPECT_THROW(CgSolve([](Eigen::VectorXcd const &x) -> Eigen::VectorXcd { return -x; }, b, CgConfig{}),
               NumericalError);
  b[2] = Cx{std::numeric_limits<double>::quiet_NaN(), 0.0};
  EXPECT_THROW(CgSolve([](Eigen::VectorXcd const &x) -> Eigen::VectorXcd { return x; }, b, CgConfig{}),
               NumericalError);
  EXPECT_THROW(CgSolve([](Eigen::VectorXcd const &x) -> Eigen::VectorXcd { return x; }, b, CgConfig{0, 1e-6}),
               InvalidArgument);
}

TEST(Cg, ResidualCsv)
{
  std::ostringstream os;
  WriteResidualCsv(os, {1.0, 0.5});
  EXPECT_EQ(os.str(), "iteration,relative_residual\n0,1\n1,0.5\n");
}

TEST(DcImage, MatchesDenseSolve)
{
  std::mt19937_64 rng(7);
  Index const t = 4, k = 2, w = 8, h = 8, c = 2;
  double const mu = 0.05;
  auto const b = RandomBasis(t, k, rng);
  auto const s = RandomStack<CoilTag>(c, w, h, rng);
  auto const m = RandomMask(t, h, 0.4, rng);
  auto const y = RandomKSpace(t, w, h, c, m, rng);
  auto const z = RandomStack<CoeffTag>(k, w, h, rng);

  Eigen::MatrixXcd const a = DenseSubspaceOperator(b, s, m);
  Eigen::MatrixXcd const lhs = a.adjoint() * a + mu * Eigen::MatrixXcd::Identity(k * w * h, k * w * h);
  Eigen::VectorXcd const ref = lhs.ldlt().solve(a.adjoint() * Flatten(y) + mu * Flatten(z));

  ImageDcContext const ctx(y, b, s, m);
  auto const r = DcSolveImage(ctx, z, mu, CgConfig{500, 1e-12});
  EXPECT_LT((Flatten(r.x) - ref).norm() / ref.norm(), 1e-6);
  EXPECT_LT(norm2(DcSolveImage(y, z, mu, b, s, m, CgConfig{500, 1e-12}) - r.x), 1e-12 * norm2(r.x));
}

TEST(DcImage, NormalResidualWithinTolerance)
{
  auto const p = MakeProblem(ProblemSpec{});
  std::mt19937_64 rng(8);
  auto const z = RandomStack<CoeffTag>(p.basis.rank(), 12, 12, rng);
  double const mu = 0.05, tol = 1e-6;
  ImageDcContext const ctx(p.y, p.basis, p.sens, p.mask);
  auto const r = DcSolveImage(ctx, z, mu, CgConfig{200, tol});
  auto res = ctx.normal(r.x);
  axpy(Cx{mu}, r.x, res);
  auto rhs = ctx.adjointData;
  axpy(Cx{mu}, z, rhs);
  EXPECT_LE(norm2(res - rhs) / norm2(rhs), 10.0 * tol);
}

TEST(DcImage, LargePenaltyReturnsPrior)
{
  auto const p = MakeProblem(ProblemSpec{});
  std::mt19937_64 rng(9);
  auto const z = RandomStack<CoeffTag>(p.basis.rank(), 12, 12, rng);
  ImageDcContext const ctx(p.y, p.basis, p.sens, p.mask);
  auto const r = DcSolveImage(ctx, z, 1e8, CgConfig{15, 1e-12});
  EXPECT_LT(norm2(r.x - z) / norm2(z), 1e-4);
}

TEST(DcImage, FullySampledUnregularisedInverts)
{
  std::mt19937_64 rng(10);
  Index const t = 4;
  SubspaceBasis b;
  b.phi = Eigen::MatrixXcd::Identity(t, t);
  SensMaps s(1, 8, 6);
  s[0].setConstant(Cx{1.0, 0.0});
  SamplingMask const m(t, 6, true);
  auto const y = RandomKSpace(t, 8, 6, 1, m, rng);
  auto const x = DcSolveImage(y, CoeffMaps(t, 8, 6), 0.0, b, s, m, CgConfig{5, 1e-14});
  for (Index i = 0; i < t; i++) {
    EXPECT_LT((x[i] - Fft2(static_cast<CxImage const &>(y[i][0]), true)).abs().maxCoeff(), 1e-10);
  }
}

TEST(DcSens, MatchesDenseSolve)
{
  std::mt19937_64 rng(11);
  Index const t = 4, c = 2, w = 6, h = 8;
  double const mu = 0.02, lambda = 2.0;
  auto const x = RandomStack<EchoTag>(t, w, h, rng);
  auto const m = RandomMask(t, h, 0.5, rng);
  auto const y = RandomKSpace(t, w, h, c, m, rng);
  auto const z = RandomStack<CoilTag>(c, w, h, rng);

  Index const p = w * h;
  Eigen::MatrixXcd const bop = DenseSensOperator(x, c, m);
  Eigen::MatrixXd const d = DenseGradient(w, h);
  Eigen::MatrixXcd dtd = Eigen::MatrixXcd::Zero(c * p, c * p);
  for (Index i = 0; i < c; i++) { dtd.block(i * p, i * p, p, p) = (d.transpose() * d).cast<Cx>(); }
  Eigen::MatrixXcd const lhs = bop.adjoint() * bop + mu * Eigen::MatrixXcd::Identity(c * p, c * p) + lambda * dtd;
  Eigen::VectorXcd const ref = lhs.ldlt().solve(bop.adjoint() * Flatten(y) + mu * Flatten(z));

  auto const got = DcSolveSens(y, z, x, mu, lambda, m, CgConfig{2000, 1e-13});
  EXPECT_LT((Flatten(got) - ref).norm() / ref.norm(), 1e-6);
}

TEST(DcSens, LargePenaltyReturnsPrior)
{
  std::mt19937_64 rng(12);
  auto const x = RandomStack<EchoTag>(3, 6, 6, rng);
  auto const m = RandomMask(3, 6, 0.5, rng);
  auto const y = RandomKSpace(3, 6, 6, 2, m, rng);
  auto const z = RandomStack<CoilTag>(2, 6, 6, rng);
  auto const s = DcSolveSens(y, z, x, 1e8, 2.0, m, CgConfig{15, 1e-12});
  EXPECT_LT(norm2(s - z) / norm2(z), 1e-4);
}

TEST(DcSens, StrongSmoothnessFlattensMaps)
{
  std::mt19937_64 rng(13);
  auto const x = RandomStack<EchoTag>(3, 8, 8, rng);
  auto const m = RandomMask(3, 8, 0.5, rng);
  auto const y = RandomKSpace(3, 8, 8, 2, m, rng);
  auto const z = RandomStack<CoilTag>(2, 8, 8, rng);
  auto const s = DcSolveSens(y, z, x, 0.02, 1e8, m, CgConfig{500, 1e-14});
  for (Index c = 0; c < 2; c++) {
    Cx const mean = s[c].mean();
    EXPECT_LT((s[c] - mean).abs().maxCoeff(), 1e-4 * std::abs(mean)) << c;
  }
}

TEST(Wavelet, PerfectReconstructionAndOrthogonality)
{
  std::mt19937_64 rng(14);
  for (auto [w, h, lv] : {std::tuple<Index, Index, Index>{16, 16, 3}, {32, 24, 2}, {64, 64, 3}}) {
    CxImage const x = RandomStack<CoilTag>(1, w, h, rng)[0];
    CxImage const c = Dwt2(x, lv);
    EXPECT_NEAR(c.matrix().norm(), x.matrix().norm(), 1e-10 * x.matrix().norm());
    EXPECT_LT((Idwt2(c, lv) - x).abs().maxCoeff(), 1e-10);
  }
}

TEST(Wavelet, ConstantHasNoDetail)
{
  CxImage const x = CxImage::Constant(32, 32, Cx{1.5, -0.5});
  Index const lv = 3;
  CxImage const c = Dwt2(x, lv);
  Index const cw = 32 >> lv, ch = 32 >> lv;
  double detail = 0.0;
  for (Index i = 0; i < 32; i++) {
    for (Index j = 0; j < 32; j++) {
      if (i >= cw || j >= ch) { detail = std::max(detail, std::abs(c(i, j))); }
    }
  }
  EXPECT_LT(detail, 1e-12);
}

TEST(Wavelet, Adjoint)
{
  std::mt19937_64 rng(15);
  for (int i = 0; i < 20; i++) {
    CxImage const x = RandomStack<CoilTag>(1, 16, 32, rng)[0], v = RandomStack<CoilTag>(1, 16, 32, rng)[0];
    CxImage const wx = Dwt2(x, 2);
    Cx const lhs = (wx.conjugate() * v).sum(), rhs = (x.conjugate() * Idwt2(v, 2)).sum();
    EXPECT_LT(std::abs(lhs - rhs) / (wx.matrix().norm() * v.matrix().norm()), 1e-10);
  }
}

TEST(Fista, SoftThreshold)
{
  EXPECT_EQ(SoftThreshold(Cx{3.0, 0.0}, 1.0), Cx(2.0, 0.0));
  EXPECT_EQ(SoftThreshold(Cx{-0.5, 0.0}, 1.0), Cx(0.0, 0.0));
  EXPECT_LT(std::abs(SoftThreshold(Cx{3.0, 4.0}, 1.0) - Cx{2.4, 3.2}), 1e-15);
}

TEST(Fista, ZeroData)
{
  auto const p = MakeProblem(ProblemSpec{});
  EchoSeriesKSpace const zero(p.y.echoCount(), 12, 12, p.sens.size(), p.mask);
  auto const r = FistaL1Wavelet(zero, p.basis, p.sens, p.mask, FistaConfig{});
  EXPECT_EQ(norm2(r.alpha), 0.0);
}

TEST(Fista, UnpenalisedMatchesLeastSquares)
{
  auto const p = MakeProblem(ProblemSpec{.size = 16, .lines = 16});
  FistaConfig cfg;
  cfg.l1Weight = 0.0;
  cfg.maxIters = 300;
  cfg.levels = 2;
  auto const r = FistaL1Wavelet(p.y, p.basis, p.sens, p.mask, cfg);
  ImageDcContext const ctx(p.y, p.basis, p.sens, p.mask);
  auto const ls = CgSolve(ctx.normal, ctx.adjointData, CgConfig{500, 1e-14}).x;
  auto const res = ForwardSubspace(ls, p.basis, p.sens, p.mask);
  auto diff = p.y;
  axpy(Cx{-1.0}, res, diff);
  double const fLs = dotc(diff, diff).real();
  double const yy = dotc(p.y, p.y).real();
  EXPECT_LT(std::abs(r.objective.back() - fLs) / yy, 1e-4);
}

TEST(Fista, ObjectiveDecreases)
{
  auto const p = MakeProblem(ProblemSpec{.size = 16, .lines = 6, .noise = 0.01});
  for (double mu : {1e-4, 1e-3, 1e-2}) {
    FistaConfig cfg;
    cfg.l1Weight = mu;
    cfg.levels = 2;
    auto const r = FistaL1Wavelet(p.y, p.basis, p.sens, p.mask, cfg);
    ASSERT_EQ(r.objective.size(), 201u);
    EXPECT_LE(r.objective.back(), r.objective[1]);
    EXPECT_LT(r.objective.back(), r.objective.front());
  }
}

TEST(Fista, PowerIterationFindsLargestEigenvalue)
{
  std::mt19937_64 rng(16);
  auto const x0 = RandomStack<CoeffTag>(1, 4, 4, rng);
  Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(16, 0.1, 3.0);
  auto op = [&](CoeffMaps const &a) {
    CoeffMaps o = a;
    for (Index i = 0; i < 16; i++) { o[0].data()[i] *= d[i]; }
    return o;
  };
  EXPECT_NEAR(PowerIteration(op, x0, 500), 3.0, 1e-3);
}
