#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "fixtures.hpp"
#include "zsfse/metrics.hpp"
#include "zsfse/phantom.hpp"

using namespace zs;
using namespace zs::test;

namespace {

// Direct windowed SSIM: explicit 2D Gaussian weights at each valid centre.
auto SsimOracle(ReImage const &x, ReImage const &y, Index n, double sigma) -> double
{
  double const L = y.maxCoeff(), c1 = std::pow(0.01 * L, 2), c2 = std::pow(0.03 * L, 2);
  Eigen::MatrixXd w(n, n);
  for (Index i = 0; i < n; i++) {
    for (Index j = 0; j < n; j++) {
      double const di = static_cast<double>(i - n / 2), dj = static_cast<double>(j - n / 2);
      w(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  }
  w /= w.sum();
  double total = 0.0;
  Index count = 0;
  for (Index a = 0; a + n <= x.rows(); a++) {
    for (Index b = 0; b + n <= x.cols(); b++) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (Index i = 0; i < n; i++) {
        for (Index j = 0; j < n; j++) {
          mx += w(i, j) * x(a + i, b + j);
          my += w(i, j) * y(a + i, b + j);
        }
      }
      for (Index i = 0; i < n; i++) {
        for (Index j = 0; j < n; j++) {
          double const dx = x(a + i, b + j) - mx, dy = y(a + i, b + j) - my;
          sxx += w(i, j) * dx * dx;
          syy += w(i, j) * dy * dy;
          sxy += w(i, j) * dx * dy;
        }
      }
      total += ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
      count++;
    }
  }
  return total / static_cast<double>(count);
}

auto Dict(Index echoes) -> Dictionary
{
  SequenceParams seq;
  seq.echoCount = echoes;
  return BuildDictionary(seq, LogSpacedT2Grid(), 1000.0);
}

} // namespace

TEST(Nmse, ReferenceValues)
{
  std::mt19937_64 rng(1);
  auto const x = RandomStack<EchoTag>(4, 6, 5, rng);
  EXPECT_EQ(Nmse(x, x), 0.0);
  EXPECT_NEAR(Nmse(EchoImages::zerosLike(x), x), 100.0, 1e-12);
  EXPECT_NEAR(Nmse(Cx{2.0} * x, x), 100.0, 1e-12);
  EXPECT_NEAR(Nmse(Cx{1.1} * x, x), 1.0, 1e-10);
  // Magnitude based: a global phase costs nothing.
  EXPECT_NEAR(Nmse(Cx{0.0, 1.0} * x, x), 0.0, 1e-12);
}

TEST(Nmse, ScaleLaw)
{
  std::mt19937_64 rng(2);
  auto const x = RandomStack<EchoTag>(3, 4, 4, rng), e = RandomStack<EchoTag>(3, 4, 4, rng);
  double const base = Nmse(e, x);
  EXPECT_NEAR(Nmse(Cx{3.0} * e, Cx{3.0} * x), base, 1e-10 * base);
  EXPECT_THROW(Nmse(e, EchoImages::zerosLike(x)), InvalidArgument);
  EXPECT_THROW(Nmse(RandomStack<EchoTag>(2, 4, 4, rng), x), ShapeError);
}

TEST(Ssim, IdentityIsOne)
{
  ReImage const a = ReImage::Random(32, 24).abs();
  EXPECT_NEAR(Ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, MatchesDirectOracle)
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto [w, h] : {std::pair<Index, Index>{8, 8}, {16, 13}, {20, 20}}) {
    ReImage x(w, h), y(w, h);
    for (Index i = 0; i < x.size(); i++) {
      y.data()[i] = u(rng);
      x.data()[i] = y.data()[i] + 0.2 * u(rng);
    }
    Index const n = std::min<Index>({11, w, h}) % 2 ? std::min<Index>({11, w, h}) : std::min<Index>({11, w, h}) - 1;
    EXPECT_NEAR(Ssim(x, y), SsimOracle(x, y, n, 1.5), 1e-12) << w << "x" << h;
  }
}

TEST(Ssim, SmallImageClampsWindow)
{
  // An 8x8 image takes a 7x7 window and leaves a 2x2 valid region.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ReImage x(8, 8), y(8, 8);
  for (Index i = 0; i < 64; i++) {
    x.data()[i] = u(rng);
    y.data()[i] = u(rng);
  }
  EXPECT_NEAR(Ssim(x, y), SsimOracle(x, y, 7, 1.5), 1e-12);
}

TEST(Ssim, DecreasesWithNoise)
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  auto const ph = MakePhantom(48, 48, 1);
  ReImage noise(48, 48);
  for (Index i = 0; i < noise.size(); i++) { noise.data()[i] = nd(rng); }
  double prev = 1.0;
  for (double s : {0.01, 0.03, 0.1, 0.3}) {
    double const v = Ssim(ph.pd + s * noise, ph.pd);
    EXPECT_LT(v, prev) << s;
    prev = v;
  }
}

TEST(Ssim, RangeIsReferencePeak)
{
  // Scaling both images leaves SSIM unchanged because the constants follow max(ref).
  ReImage const a = ReImage::Random(16, 16).abs(), b = ReImage::Random(16, 16).abs();
  EXPECT_NEAR(Ssim(5.0 * a, 5.0 * b), Ssim(a, b), 1e-12);
  EXPECT_THROW(Ssim(a, ReImage::Zero(16, 16)), InvalidArgument);
}

TEST(T2Fit, ExactOnDictionaryAtom)
{
  auto const dict = Dict(32);
  Index const k = 150;
  double const t2 = dict.t2Grid[k];
  EchoImages x(32, 4, 3);
  for (Index t = 0; t < 32; t++) { x[t].setConstant(0.7 * dict.atoms(t, k)); }
  BoolImage s = BoolImage::Constant(4, 3, true);
  s(0, 0) = false;
  auto const map = FitT2Map(x, dict, s);
  EXPECT_EQ(map(0, 0), 0.0);
  EXPECT_EQ(map(1, 1), t2);
  EXPECT_EQ(map(3, 2), t2);
}

TEST(T2Fit, RecoversOffGridValue)
{
  auto const dict = Dict(32);
  SequenceParams seq;
  auto const sig = EpgSimulate(seq, TissueParams{110.0, 1000.0, 1.0});
  EchoImages x(32, 1, 1);
  for (Index t = 0; t < 32; t++) { x[t](0, 0) = sig[t]; }
  auto const map = FitT2Map(x, dict, BoolImage::Constant(1, 1, true));
  // Log grid spacing of 256 points over 5..400 ms is about 1.7%.
  EXPECT_NEAR(map(0, 0), 110.0, 0.02 * 110.0);
}

TEST(T2Fit, ScaleAndPhaseInvariant)
{
  auto const ph = MakePhantom(24, 24, 2);
  SequenceParams seq;
  auto const scan = SimulateKSpace(ph, seq, MakeSensMaps(1, 24, 24, 0), 0.0, 0);
  auto const dict = Dict(32);
  auto const a = FitT2Map(scan.truth, dict, ph.support);
  auto const b = FitT2Map(Cx{0.0, 3.5} * scan.truth, dict, ph.support);
  EXPECT_TRUE((a == b).all());
}

TEST(T2Fit, ProjectedTruthKeepsT2)
{
  auto const ph = MakePhantom(48, 48, 3);
  SequenceParams seq;
  auto const scan = SimulateKSpace(ph, seq, MakeSensMaps(1, 48, 48, 0), 0.0, 0);
  auto const dict = Dict(32);
  auto const basis = BuildSubspace(dict, 3);
  auto const proj = Expand(basis, Project(basis, scan.truth));
  auto const map = FitT2Map(proj, dict, ph.support);
  std::vector<double> rel;
  for (Index i = 0; i < map.size(); i++) {
    if (ph.support.data()[i]) { rel.push_back(std::abs(map.data()[i] - ph.t2.data()[i]) / ph.t2.data()[i]); }
  }
  std::nth_element(rel.begin(), rel.begin() + static_cast<long>(rel.size() / 2), rel.end());
  EXPECT_LT(rel[rel.size() / 2], 0.05);
}

TEST(T2Fit, ShapeChecks)
{
  auto const dict = Dict(8);
  EXPECT_THROW(FitT2Map(EchoImages(7, 2, 2), dict, BoolImage::Constant(2, 2, true)), ShapeError);
  EXPECT_THROW(FitT2Map(EchoImages(8, 2, 2), dict, BoolImage::Constant(3, 2, true)), ShapeError);
}

TEST(NmseT2, MaskedPercent)
{
  ReImage ref(2, 2), est(2, 2);
  ref << 100, 50, 20, 10;
  est << 110, 50, 999, 10;
  BoolImage m(2, 2);
  m << true, true, false, true;
  double const expect = 100.0 * 100.0 / (100.0 * 100.0 + 50.0 * 50.0 + 10.0 * 10.0);
  EXPECT_NEAR(NmseT2(est, ref, m), expect, 1e-12);
  EXPECT_THROW(NmseT2(est, ref, BoolImage::Constant(2, 2, false)), InvalidArgument);
}

TEST(NmseT2, ScoringMaskDropsFaintPixels)
{
  ReImage pd(3, 1);
  pd << 1.0, 0.05, 0.5;
  BoolImage s(3, 1);
  s << true, true, false;
  auto const m = T2ScoringMask(pd, s);
  EXPECT_TRUE(m(0, 0));
  EXPECT_FALSE(m(1, 0));
  EXPECT_FALSE(m(2, 0));
}

TEST(SensMapError, InvariantToPixelScaleAndPhase)
{
  auto const ref = MakeSensMaps(4, 16, 16, 1);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.1, 3.0), ph(-3.0, 3.0);
  SensMaps est = ref;
  for (Index x = 0; x < 16; x++) {
    for (Index y = 0; y < 16; y++) {
      Cx const f = std::polar(u(rng), ph(rng));
      for (Index c = 0; c < 4; c++) { est[c](x, y) *= f; }
    }
  }
  BoolImage const s = BoolImage::Constant(16, 16, true);
  EXPECT_LT(SensMapError(est, ref, s), 1e-12);
  EXPECT_GT(SensMapError(MakeSensMaps(4, 16, 16, 2), ref, s), 0.1);
}

TEST(SensMapError, ScalesWithPerturbation)
{
  auto const ref = MakeSensMaps(4, 16, 16, 1);
  std::mt19937_64 rng(7);
  auto const d = RandomStack<CoilTag>(4, 16, 16, rng);
  BoolImage const s = BoolImage::Constant(16, 16, true);
  double const e1 = SensMapError(ref + Cx{1e-4} * d, ref, s), e2 = SensMapError(ref + Cx{2e-4} * d, ref, s);
  EXPECT_NEAR(e2 / e1, 2.0, 0.01);
}

TEST(SensTotalVariation, ConstantMapsAreFlat)
{
  EXPECT_LT(SensTotalVariation(MakeSensMaps(1, 8, 8, 0)), 1e-12);
  EXPECT_GT(SensTotalVariation(MakeSensMaps(4, 8, 8, 0)), 0.0);
}

TEST(Evaluate, TruthScoresPerfect)
{
  auto const ph = MakePhantom(32, 32, 4);
  SequenceParams seq;
  auto const scan = SimulateKSpace(ph, seq, MakeSensMaps(1, 32, 32, 0), 0.0, 0);
  EvalTruth const truth{scan.truth, ph.t2, ph.pd, ph.support};
  auto const dict = Dict(32);
  auto const r = Evaluate("truth", scan.truth, truth, dict);
  EXPECT_EQ(r.nmseI, 0.0);
  EXPECT_NEAR(r.ssimI, 1.0, 1e-12);
  EXPECT_LT(r.nmseT2, 1.0); // grid quantisation only
  EXPECT_EQ(r.echoNmse.size(), 32u);
  std::ostringstream a, b;
  WriteSummaryCsv(a, {r});
  WritePerEchoCsv(b, {r});
  auto const summary = a.str(), perEcho = b.str();
  EXPECT_EQ(summary.substr(0, summary.find('\n')), "method,nmse_i_percent,ssim_i,nmse_t2_percent,config_digest");
  EXPECT_EQ(std::count(perEcho.begin(), perEcho.end(), '\n'), 33);
}
