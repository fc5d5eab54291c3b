#include "zsfse/solvers.hpp"

#include <array>
#include <ostream>

namespace zs {

void WriteResidualCsv(std::ostream &os, std::vector<double> const &residuals)
{
  os << "iteration,relative_residual\n";
  for (size_t i = 0; i < residuals.size(); i++) { os << fmt::format("{},{:.17g}\n", i, residuals[i]); }
}

ImageDcContext::ImageDcContext(EchoSeriesKSpace const &y, SubspaceBasis const &basis,
                               SensMaps const &sens, SamplingMask const &mask)
  : normal(basis, sens, mask)
  , adjointData(AdjointSubspace(y, basis, sens, mask))
{
}

auto DcSolveImage(ImageDcContext const &ctx, CoeffMaps const &z, double mu, CgConfig const &cfg)
  -> CgResult<CoeffMaps>
{
  if (!(mu >= 0.0)) { throw InvalidArgument("image DC weight must be >= 0"); }
  checkSameShape(z, ctx.adjointData, "DcSolveImage");
  CoeffMaps rhs = ctx.adjointData;
  axpy(Cx{mu}, z, rhs);
  auto op = [&](CoeffMaps const &a) {
    CoeffMaps out = ctx.normal(a);
    axpy(Cx{mu}, a, out);
    return out;
  };
  return CgSolve(op, rhs, cfg, &z);
}

auto DcSolveImage(EchoSeriesKSpace const &y, CoeffMaps const &z, double mu,
                  SubspaceBasis const &basis, SensMaps const &sens, SamplingMask const &mask,
                  CgConfig const &cfg) -> CoeffMaps
{
  ImageDcContext const ctx(y, basis, sens, mask);
  return DcSolveImage(ctx, z, mu, cfg).x;
}

SensDcContext::SensDcContext(EchoSeriesKSpace const &y, EchoImages const &x, SamplingMask const &mask)
  : normal(x, mask)
  , adjointData(AdjointSens(y, x, mask))
{
}

auto DcSolveSens(SensDcContext const &ctx, SensMaps const &z, double mu, double lambda,
                 CgConfig const &cfg) -> CgResult<SensMaps>
{
  if (!(mu >= 0.0)) { throw InvalidArgument("sensitivity DC weight must be >= 0"); }
  if (!(lambda >= 0.0)) { throw InvalidArgument("smoothness weight must be >= 0"); }
  checkSameShape(z, ctx.adjointData, "DcSolveSens");
  SensMaps rhs = ctx.adjointData;
  axpy(Cx{mu}, z, rhs);
  auto op = [&](SensMaps const &s) {
    SensMaps out = ctx.normal(s);
    axpy(Cx{mu}, s, out);
    if (lambda > 0.0) { axpy(Cx{lambda}, SpatialGradientAdjoint(SpatialGradient(s)), out); }
    return out;
  };
  return CgSolve(op, rhs, cfg, &z);
}

auto DcSolveSens(EchoSeriesKSpace const &y, SensMaps const &z, EchoImages const &x, double mu,
                 double lambda, SamplingMask const &mask, CgConfig const &cfg) -> SensMaps
{
  SensDcContext const ctx(y, x, mask);
  return DcSolveSens(ctx, z, mu, lambda, cfg).x;
}

ImagesDcContext::ImagesDcContext(EchoSeriesKSpace const &y, SensMaps const &sens,
                                 SamplingMask const &mask)
  : normal(sens, mask)
  , adjointData(AdjointImages(y, sens, mask))
{
}

auto DcSolveImages(ImagesDcContext const &ctx, EchoImages const &z, double mu, CgConfig const &cfg)
  -> CgResult<EchoImages>
{
  if (!(mu >= 0.0)) { throw InvalidArgument("image DC weight must be >= 0"); }
  checkSameShape(z, ctx.adjointData, "DcSolveImages");
  EchoImages rhs = ctx.adjointData;
  axpy(Cx{mu}, z, rhs);
  auto op = [&](EchoImages const &x) {
    EchoImages out = ctx.normal(x);
    axpy(Cx{mu}, x, out);
    return out;
  };
  return CgSolve(op, rhs, cfg, &z);
}

namespace {

// db4 reconstruction low-pass; orthonormal, sums to sqrt(2).
constexpr std::array<double, 8> kLow{0.23037781330885523,  0.7148465705525415,   0.6308807679295904,
                                     -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
                                     0.032883011666982945, -0.010597401784997278};

constexpr auto HighPass() -> std::array<double, 8>
{
  std::array<double, 8> g{};
  for (size_t k = 0; k < 8; k++) { g[k] = ((k % 2) ? -1.0 : 1.0) * kLow[7 - k]; }
  return g;
}
constexpr std::array<double, 8> kHigh = HighPass();

void Analyze(std::vector<Cx> &x)
{
  size_t const n = x.size(), half = n / 2;
  std::vector<Cx> out(n);
  for (size_t i = 0; i < half; i++) {
    Cx a{0.0}, d{0.0};
    for (size_t k = 0; k < 8; k++) {
      Cx const v = x[(2 * i + k) % n];
      a += kLow[k] * v;
      d += kHigh[k] * v;
    }
    out[i] = a;
    out[half + i] = d;
  }
  x.swap(out);
}

void Synthesize(std::vector<Cx> &c)
{
  size_t const n = c.size(), half = n / 2;
  std::vector<Cx> out(n, Cx{0.0});
  for (size_t i = 0; i < half; i++) {
    for (size_t k = 0; k < 8; k++) { out[(2 * i + k) % n] += kLow[k] * c[i] + kHigh[k] * c[half + i]; }
  }
  c.swap(out);
}

void CheckLevels(CxImage const &img, Index levels)
{
  if (levels < 0) { throw InvalidArgument("wavelet levels must be >= 0"); }
  Index const f = Index{1} << levels;
  if (img.rows() % f != 0 || img.cols() % f != 0 || img.rows() / f < 1 || img.cols() / f < 1) {
    throw ShapeError(fmt::format("{}x{} image not divisible by 2^{}", img.rows(), img.cols(), levels));
  }
}

template <typename F>
void Separable(CxImage &im, Index w, Index h, F &&f)
{
  std::vector<Cx> buf;
  buf.resize(static_cast<size_t>(h));
  for (Index x = 0; x < w; x++) {
    for (Index y = 0; y < h; y++) { buf[static_cast<size_t>(y)] = im(x, y); }
    f(buf);
    for (Index y = 0; y < h; y++) { im(x, y) = buf[static_cast<size_t>(y)]; }
  }
  buf.resize(static_cast<size_t>(w));
  for (Index y = 0; y < h; y++) {
    for (Index x = 0; x < w; x++) { buf[static_cast<size_t>(x)] = im(x, y); }
    f(buf);
    for (Index x = 0; x < w; x++) { im(x, y) = buf[static_cast<size_t>(x)]; }
  }
}

} // namespace

auto Dwt2(CxImage const &img, Index levels) -> CxImage
{
  CheckLevels(img, levels);
  CxImage out = img;
  for (Index l = 0; l < levels; l++) {
    Separable(out, img.rows() >> l, img.cols() >> l, Analyze);
  }
  return out;
}

auto Idwt2(CxImage const &coeffs, Index levels) -> CxImage
{
  CheckLevels(coeffs, levels);
  CxImage out = coeffs;
  for (Index l = levels - 1; l >= 0; l--) {
    Separable(out, coeffs.rows() >> l, coeffs.cols() >> l, Synthesize);
  }
  return out;
}

void FistaConfig::validate() const
{
  if (maxIters < 1) { throw InvalidArgument("FISTA needs at least one iteration"); }
  if (!(l1Weight >= 0.0)) { throw InvalidArgument("l1 weight must be >= 0"); }
  if (levels < 0) { throw InvalidArgument("wavelet levels must be >= 0"); }
}

auto PowerIteration(std::function<CoeffMaps(CoeffMaps const &)> const &op, CoeffMaps start,
                    Index iters) -> double
{
  double lambda = 0.0;
  double n = norm2(start);
  if (n == 0.0) { throw InvalidArgument("power iteration needs a non-zero start"); }
  start *= 1.0 / n;
  for (Index i = 0; i < iters; i++) {
    CoeffMaps next = op(start);
    lambda = dotc(start, next).real();
    n = norm2(next);
    if (n == 0.0) { return 0.0; }
    next *= 1.0 / n;
    start = std::move(next);
  }
  return lambda;
}

auto FistaL1Wavelet(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                    SamplingMask const &mask, FistaConfig const &cfg) -> FistaResult
{
  cfg.validate();
  SubspaceNormal const normal(basis, sens, mask);
  CoeffMaps const ahy = AdjointSubspace(y, basis, sens, mask);
  double const yy = dotc(y, y).real();

  auto penalty = [&](CoeffMaps const &a) {
    double s = 0.0;
    for (auto const &im : a.data) { s += Dwt2(im, cfg.levels).abs().sum(); }
    return cfg.l1Weight * s;
  };
  auto objective = [&](CoeffMaps const &a) {
    CoeffMaps const aha = normal(a);
    double const fit = yy - 2.0 * dotc(a, ahy).real() + dotc(a, aha).real();
    return std::max(fit, 0.0) + penalty(a);
  };

  FistaResult res;
  res.alpha = CoeffMaps(basis.rank(), y.width(), y.height());
  double const f0 = yy;
  res.objective.push_back(f0);
  if (yy == 0.0) { return res; }

  double step = cfg.stepSize;
  if (step <= 0.0) {
    CoeffMaps start = ahy;
    if (norm2(start) == 0.0) { start[0].setConstant(Cx{1.0, 0.0}); }
    double const l = 2.0 * PowerIteration([&](CoeffMaps const &a) { return normal(a); }, start, 30);
    step = 1.0 / (1.01 * l);
  }

  CoeffMaps x = res.alpha, z = res.alpha;
  double t = 1.0;
  for (Index it = 0; it < cfg.maxIters; it++) {
    // gradient of ||y - A a||^2 is 2 (A^H A a - A^H y)
    CoeffMaps grad = normal(z);
    grad -= ahy;
    CoeffMaps v = z;
    axpy(Cx{-2.0 * step}, grad, v);
    CoeffMaps xNew(v.size(), v.width(), v.height());
    for (Index k = 0; k < v.size(); k++) {
      CxImage w = Dwt2(v[k], cfg.levels);
      w = w.unaryExpr([&](Cx c) { return SoftThreshold(c, cfg.l1Weight * step); });
      xNew[k] = Idwt2(w, cfg.levels);
    }
    double const tNew = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = xNew;
    CoeffMaps diff = xNew - x;
    axpy(Cx{(t - 1.0) / tNew}, diff, z);
    x = std::move(xNew);
    t = tNew;
    double const f = objective(x);
    if (!std::isfinite(f)) { throw NumericalError("FISTA: non-finite objective"); }
    if (f > 10.0 * f0) {
      throw NumericalError(fmt::format("FISTA diverged at iteration {} (objective {} vs {}); reduce the step size", it, f, f0));
    }
    res.objective.push_back(f);
  }
  res.alpha = std::move(x);
  return res;
}

} // namespace zs
