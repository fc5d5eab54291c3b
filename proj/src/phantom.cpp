#include "zsfse/phantom.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "zsfse/fft.hpp"

namespace zs {

namespace {

struct Ellipse
{
  double cx, cy, ax, ay, angle;

  auto contains(double x, double y) const -> bool
  {
    double const c = std::cos(angle), s = std::sin(angle);
    double const u = (x - cx) * c + (y - cy) * s;
    double const v = -(x - cx) * s + (y - cy) * c;
    return (u * u) / (ax * ax) + (v * v) / (ay * ay) <= 1.0;
  }
};

struct Tissue
{
  Ellipse shape;
  double t2;
  double pd;
};

auto Coord(Index i, Index n) -> double
{
  return (static_cast<double>(i) + 0.5) / static_cast<double>(n) * 2.0 - 1.0;
}

} // namespace

auto MakePhantom(Index w, Index h, std::uint64_t seed) -> Phantom
{
  if (w < 4 || h < 4) { throw InvalidArgument("phantom needs at least 4x4 pixels"); }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jit(-0.03, 0.03), ph(0.0, 2.0 * std::numbers::pi);
  auto j = [&] { return jit(rng); };

  // Painted in order; later tissues overwrite earlier ones.
  std::vector<Tissue> const tissues{
    {{0.0, 0.0, 0.80, 0.70, 0.0}, 85.0, 0.80},             // cortex / grey matter
    {{j(), j(), 0.66 + j(), 0.56 + j(), 0.0}, 60.0, 0.65}, // white matter
    {{-0.30 + j(), -0.12 + j(), 0.12, 0.20, 0.3}, 110.0, 0.85}, // deep nuclei
    {{0.30 + j(), -0.12 + j(), 0.12, 0.20, -0.3}, 110.0, 0.85},
    {{-0.12 + j(), 0.08 + j(), 0.07, 0.24, 0.2}, 300.0, 1.00}, // ventricles
    {{0.12 + j(), 0.08 + j(), 0.07, 0.24, -0.2}, 300.0, 1.00},
    {{0.38 + j(), 0.36 + j(), 0.09, 0.09, 0.0}, 250.0, 0.90}, // lesion
  };
  double const f1 = 1.0 + 0.5 * jit(rng) / 0.03, p1 = ph(rng), p2 = ph(rng);

  Phantom out{ReImage::Zero(w, h), ReImage::Zero(w, h), BoolImage::Constant(w, h, false)};
  for (Index x = 0; x < w; x++) {
    for (Index y = 0; y < h; y++) {
      double const u = Coord(x, w), v = Coord(y, h);
      for (auto const &t : tissues) {
        if (t.shape.contains(u, v)) {
          out.t2(x, y) = t.t2;
          out.pd(x, y) = t.pd;
          out.support(x, y) = true;
        }
      }
      if (out.support(x, y)) {
        out.pd(x, y) *= 1.0 + 0.08 * std::sin(std::numbers::pi * f1 * u + p1) * std::cos(std::numbers::pi * v + p2);
      }
    }
  }
  return out;
}

auto MakeSensMaps(Index coils, Index w, Index h, std::uint64_t seed) -> SensMaps
{
  if (coils < 1) { throw InvalidArgument("need at least one coil"); }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jit(-0.15, 0.15), coef(-0.6, 0.6);
  SensMaps raw(coils, w, h);
  for (Index c = 0; c < coils; c++) {
    double const ang = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(coils) + jit(rng);
    double const px = 1.3 * std::cos(ang), py = 1.3 * std::sin(ang);
    double const a0 = coef(rng), a1 = coef(rng), a2 = coef(rng), a3 = 0.5 * coef(rng);
    for (Index x = 0; x < w; x++) {
      for (Index y = 0; y < h; y++) {
        double const u = Coord(x, w), v = Coord(y, h);
        double const d2 = (u - px) * (u - px) + (v - py) * (v - py);
        double const mag = 1.0 / (1.0 + d2);
        double const phase = a0 + a1 * u + a2 * v + a3 * u * v;
        raw[c](x, y) = std::polar(mag, phase);
      }
    }
  }
  ReImage rss = ReImage::Zero(w, h);
  for (auto const &m : raw.data) { rss += m.abs2(); }
  rss = rss.sqrt();
  CxImage const ref = raw[0] / raw[0].abs().cast<Cx>();
  SensMaps out(coils, w, h);
  for (Index c = 0; c < coils; c++) { out[c] = raw[c] / rss.cast<Cx>() * ref.conjugate(); }
  return out;
}

auto SimulateKSpace(Phantom const &ph, SequenceParams const &seq, SensMaps const &sens, double noiseSigma,
                    std::uint64_t seed, double t1) -> SimulatedScan
{
  if (sens.width() != ph.width() || sens.height() != ph.height()) {
    throw ShapeError("coil maps and phantom differ in size");
  }
  if (!(noiseSigma >= 0.0)) { throw InvalidArgument("noise sigma must be >= 0"); }
  Index const w = ph.width(), h = ph.height(), nt = seq.echoCount;
  std::map<double, Eigen::VectorXcd> evolutions;
  EchoImages x(nt, w, h);
  for (Index px = 0; px < w; px++) {
    for (Index py = 0; py < h; py++) {
      if (!ph.support(px, py)) { continue; }
      double const t2 = ph.t2(px, py);
      auto it = evolutions.find(t2);
      if (it == evolutions.end()) { it = evolutions.emplace(t2, EpgSimulate(seq, TissueParams{t2, t1, 1.0})).first; }
      for (Index t = 0; t < nt; t++) { x[t](px, py) = ph.pd(px, py) * it->second[t]; }
    }
  }
  SamplingMask full(nt, h, true);
  SimulatedScan scan{ForwardImages(x, sens, full), std::move(x)};
  if (noiseSigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, noiseSigma / std::numbers::sqrt2);
    for (auto &echo : scan.kspace.echoes) {
      for (auto &k : echo.data) {
        for (Index i = 0; i < k.size(); i++) {
          double const re = nd(rng);
          double const im = nd(rng);
          k.data()[i] += Cx{re, im};
        }
      }
    }
  }
  return scan;
}

auto MaxKSpaceMagnitude(EchoSeriesKSpace const &y) -> double
{
  double m = 0.0;
  for (auto const &echo : y.echoes) {
    for (auto const &k : echo.data) { m = std::max(m, k.abs().maxCoeff()); }
  }
  return m;
}

} // namespace zs
