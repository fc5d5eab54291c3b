#include "zsfse/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace zs {

void AcqSpec::validate() const
{
  if (height < 1 || echoes < 1) { throw InvalidArgument("acquisition needs at least one echo and one ky line"); }
  if (linesPerEcho < 1 || linesPerEcho > height) {
    throw InvalidArgument(fmt::format("lines per echo {} outside [1, {}]", linesPerEcho, height));
  }
  if (centerLines < 0 || centerLines > linesPerEcho) {
    throw InvalidArgument(fmt::format("{} ACS lines do not fit in {} lines per echo", centerLines, linesPerEcho));
  }
}

auto CenterLines(Index height, Index n) -> std::vector<Index>
{
  if (n < 0 || n > height) { throw InvalidArgument("ACS block larger than the ky extent"); }
  std::vector<Index> v(static_cast<size_t>(n));
  std::iota(v.begin(), v.end(), height / 2 - n / 2);
  return v;
}

auto GenShufflingMask(AcqSpec const &spec) -> SamplingMask
{
  spec.validate();
  SamplingMask m(spec.echoes, spec.height);
  auto const acs = CenterLines(spec.height, spec.centerLines);
  std::vector<Index> pool;
  for (Index ky = 0; ky < spec.height; ky++) {
    if (std::find(acs.begin(), acs.end(), ky) == acs.end()) { pool.push_back(ky); }
  }
  std::mt19937_64 rng(spec.seed);
  Index const extra = spec.linesPerEcho - spec.centerLines;
  for (Index t = 0; t < spec.echoes; t++) {
    for (Index ky : acs) { m.lines(t, ky) = true; }
    std::vector<Index> draw = pool;
    std::shuffle(draw.begin(), draw.end(), rng);
    for (Index i = 0; i < extra; i++) { m.lines(t, draw[static_cast<size_t>(i)]) = true; }
  }
  return m;
}

auto LambdaCount(Index n, PartitionSpec const &spec) -> Index
{
  if (n < 2) { throw InvalidArgument(fmt::format("degenerate partition: {} non-ACS lines in an echo", n)); }
  auto const k = static_cast<Index>(std::floor(spec.lambdaFraction() * static_cast<double>(n) + 0.5));
  return std::clamp<Index>(k, 1, n - 1);
}

auto PartitionThetaLambda(SamplingMask const &mask, PartitionSpec const &spec, std::uint64_t epoch)
  -> Partition
{
  Index const h = mask.height();
  auto const acs = CenterLines(h, spec.acsLines);
  double const sigma = spec.sigmaFraction * static_cast<double>(h);
  double const centre = static_cast<double>(h / 2);
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);

  Partition p{mask, SamplingMask(mask.echoes(), h)};
  for (Index t = 0; t < mask.echoes(); t++) {
    std::vector<Index> cand;
    std::vector<double> w;
    for (Index ky = 0; ky < h; ky++) {
      if (mask(t, ky) && std::find(acs.begin(), acs.end(), ky) == acs.end()) {
        cand.push_back(ky);
        double const d = (static_cast<double>(ky) - centre) / sigma;
        w.push_back(std::exp(-0.5 * d * d));
      }
    }
    Index const k = LambdaCount(static_cast<Index>(cand.size()), spec);
    for (Index i = 0; i < k; i++) {
      std::discrete_distribution<size_t> pick(w.begin(), w.end());
      size_t const j = pick(rng);
      p.lambda.lines(t, cand[j]) = true;
      p.theta.lines(t, cand[j]) = false;
      w[j] = 0.0;
    }
  }
  return p;
}

namespace {

struct Norms
{
  double l2 = 0.0, l1 = 0.0, r2 = 0.0, r1 = 0.0;
};

auto Accumulate(EchoSeriesKSpace const &u, EchoSeriesKSpace const &v) -> Norms
{
  if (u.echoCount() != v.echoCount() || u.coils() != v.coils() || u.width() != v.width() || u.height() != v.height()) {
    throw ShapeError("SSDU loss: measured and predicted k-space differ in shape");
  }
  Norms n;
  for (Index t = 0; t < u.echoCount(); t++) {
    for (Index c = 0; c < u.coils(); c++) {
      auto const &a = u[t][c];
      auto const &b = v[t][c];
      n.l2 += a.abs2().sum();
      n.l1 += a.abs().sum();
      n.r2 += (a - b).abs2().sum();
      n.r1 += (a - b).abs().sum();
    }
  }
  if (!(n.l2 > 0.0)) { throw NumericalError("SSDU loss undefined: measured k-space is zero"); }
  return n;
}

} // namespace

auto SsduLoss(EchoSeriesKSpace const &u, EchoSeriesKSpace const &v) -> double
{
  auto const n = Accumulate(u, v);
  return std::sqrt(n.r2) / std::sqrt(n.l2) + n.r1 / n.l1;
}

auto SsduLossGrad(EchoSeriesKSpace const &u, EchoSeriesKSpace const &v) -> LossAndGrad
{
  auto const n = Accumulate(u, v);
  LossAndGrad out;
  out.value = std::sqrt(n.r2) / std::sqrt(n.l2) + n.r1 / n.l1;
  out.grad = v;
  double const s2 = n.r2 > 0.0 ? 1.0 / (std::sqrt(n.r2) * std::sqrt(n.l2)) : 0.0;
  double const s1 = 1.0 / n.l1;
  for (Index t = 0; t < u.echoCount(); t++) {
    for (Index c = 0; c < u.coils(); c++) {
      CxImage const r = v[t][c] - u[t][c];
      out.grad[t][c] = r.unaryExpr([&](Cx e) {
        double const m = std::abs(e);
        return s2 * e + (m > 0.0 ? s1 * e / m : Cx{0.0});
      });
    }
  }
  return out;
}

} // namespace zs
