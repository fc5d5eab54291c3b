#include "zsfse/metrics.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

namespace zs {

auto Nmse(EchoImages const &est, EchoImages const &ref) -> double
{
  checkSameShape(est, ref, "NMSE");
  double num = 0.0, den = 0.0;
  for (Index t = 0; t < ref.size(); t++) {
    num += (est[t].abs() - ref[t].abs()).square().sum();
    den += ref[t].abs2().sum();
  }
  if (!(den > 0.0)) { throw InvalidArgument("NMSE undefined for an all-zero reference"); }
  return 100.0 * num / den;
}

namespace {

// Valid-mode separable Gaussian filtering.
auto Filter(ReImage const &im, Eigen::VectorXd const &g) -> ReImage
{
  Index const n = g.size(), w = im.rows() - n + 1, h = im.cols() - n + 1;
  ReImage tmp = ReImage::Zero(w, im.cols());
  for (Index i = 0; i < n; i++) { tmp += g[i] * im.middleRows(i, w); }
  ReImage out = ReImage::Zero(w, h);
  for (Index j = 0; j < n; j++) { out += g[j] * tmp.middleCols(j, h); }
  return out;
}

} // namespace

auto Ssim(ReImage const &est, ReImage const &ref, SsimConfig const &cfg) -> double
{
  if (est.rows() != ref.rows() || est.cols() != ref.cols()) { throw ShapeError("SSIM: image sizes differ"); }
  double const range = ref.maxCoeff();
  if (!(range > 0.0)) { throw InvalidArgument("SSIM undefined for a constant-zero reference"); }
  Index n = std::min({cfg.window, ref.rows(), ref.cols()});
  if (n % 2 == 0) { n--; }
  if (n < 1) { throw InvalidArgument("SSIM window is empty"); }
  Eigen::VectorXd g(n);
  for (Index i = 0; i < n; i++) {
    double const d = static_cast<double>(i - n / 2);
    g[i] = std::exp(-d * d / (2.0 * cfg.sigma * cfg.sigma));
  }
  g /= g.sum();

  double const c1 = (cfg.k1 * range) * (cfg.k1 * range), c2 = (cfg.k2 * range) * (cfg.k2 * range);
  ReImage const mx = Filter(est, g), my = Filter(ref, g);
  ReImage const sxx = Filter(est * est, g) - mx * mx;
  ReImage const syy = Filter(ref * ref, g) - my * my;
  ReImage const sxy = Filter(est * ref, g) - mx * my;
  ReImage const map = ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean();
}

auto SsimSeries(EchoImages const &est, EchoImages const &ref, SsimConfig const &cfg) -> double
{
  checkSameShape(est, ref, "SSIM");
  double s = 0.0;
  for (Index t = 0; t < ref.size(); t++) { s += Ssim(est[t].abs(), ref[t].abs(), cfg); }
  return s / static_cast<double>(ref.size());
}

auto FitT2Map(EchoImages const &x, Dictionary const &dict, BoolImage const &support) -> ReImage
{
  if (dict.size() == 0) { throw InvalidArgument("T2 fit needs a non-empty dictionary"); }
  if (dict.echoes() != x.size()) { throw ShapeError("T2 fit: dictionary and images differ in echo count"); }
  if (support.rows() != x.width() || support.cols() != x.height()) { throw ShapeError("T2 fit: support size"); }
  Eigen::MatrixXd atoms = dict.atoms.cwiseAbs();
  atoms.colwise().normalize();

  std::vector<Index> pix;
  for (Index i = 0; i < support.size(); i++) {
    if (support.data()[i]) { pix.push_back(i); }
  }
  Eigen::MatrixXd sig(static_cast<Index>(pix.size()), x.size());
  for (Index t = 0; t < x.size(); t++) {
    for (size_t p = 0; p < pix.size(); p++) { sig(static_cast<Index>(p), t) = std::abs(x[t].data()[pix[p]]); }
  }
  // Dividing by |x| would not change the argmax; only atom norms matter.
  Eigen::MatrixXd const corr = sig * atoms;

  ReImage out = ReImage::Zero(x.width(), x.height());
  for (size_t p = 0; p < pix.size(); p++) {
    Index best = 0;
    corr.row(static_cast<Index>(p)).maxCoeff(&best);
    out.data()[pix[p]] = dict.t2Grid[static_cast<size_t>(best)];
  }
  return out;
}

auto NmseT2(ReImage const &est, ReImage const &ref, BoolImage const &mask) -> double
{
  if (est.rows() != ref.rows() || est.cols() != ref.cols() || mask.rows() != ref.rows() || mask.cols() != ref.cols()) {
    throw ShapeError("T2 NMSE: map sizes differ");
  }
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < ref.size(); i++) {
    if (!mask.data()[i]) { continue; }
    double const d = est.data()[i] - ref.data()[i];
    num += d * d;
    den += ref.data()[i] * ref.data()[i];
  }
  if (!(den > 0.0)) { throw InvalidArgument("T2 NMSE: empty scoring region"); }
  return 100.0 * num / den;
}

auto T2ScoringMask(ReImage const &pd, BoolImage const &support, double fraction) -> BoolImage
{
  double const cut = fraction * pd.maxCoeff();
  return support && (pd > cut);
}

auto SensMapError(SensMaps const &est, SensMaps const &ref, BoolImage const &support) -> double
{
  checkSameShape(est, ref, "map error");
  double num = 0.0, den = 0.0;
  for (Index x = 0; x < ref.width(); x++) {
    for (Index y = 0; y < ref.height(); y++) {
      if (!support(x, y)) { continue; }
      double rss = 0.0;
      Cx align{0.0, 0.0};
      for (Index c = 0; c < ref.size(); c++) {
        rss += std::norm(est[c](x, y));
        align += std::conj(est[c](x, y)) * ref[c](x, y);
        den += std::norm(ref[c](x, y));
      }
      Cx const rot = (rss > 0.0 && std::abs(align) > 0.0) ? align / std::abs(align) / std::sqrt(rss) : Cx{0.0};
      for (Index c = 0; c < ref.size(); c++) { num += std::norm(est[c](x, y) * rot - ref[c](x, y)); }
    }
  }
  if (!(den > 0.0)) { throw InvalidArgument("map error: reference is zero on the support"); }
  return std::sqrt(num / den);
}

auto SensTotalVariation(SensMaps const &s) -> double
{
  auto const g = SpatialGradient(s);
  double tv = 0.0;
  for (Index c = 0; c < s.size(); c++) { tv += (g.dw[c].abs2() + g.dh[c].abs2()).sqrt().sum(); }
  return tv;
}

auto Evaluate(std::string method, EchoImages const &est, EvalTruth const &truth, Dictionary const &dict)
  -> MetricReport
{
  MetricReport r;
  r.method = std::move(method);
  r.nmseI = Nmse(est, truth.images);
  r.ssimI = SsimSeries(est, truth.images);
  auto const scoring = T2ScoringMask(truth.pd, truth.support);
  r.nmseT2 = NmseT2(FitT2Map(est, dict, truth.support), truth.t2, scoring);
  for (Index t = 0; t < est.size(); t++) {
    EchoImages const e({est[t]}), g({truth.images[t]});
    r.echoNmse.push_back(Nmse(e, g));
    r.echoSsim.push_back(Ssim(est[t].abs(), truth.images[t].abs()));
  }
  return r;
}

void WriteSummaryCsv(std::ostream &os, std::vector<MetricReport> const &reports)
{
  os << "method,nmse_i_percent,ssim_i,nmse_t2_percent,config_digest\n";
  for (auto const &r : reports) {
    os << fmt::format("{},{:.6f},{:.6f},{:.6f},{}\n", r.method, r.nmseI, r.ssimI, r.nmseT2, r.configDigest);
  }
}

void WritePerEchoCsv(std::ostream &os, std::vector<MetricReport> const &reports)
{
  os << "method,echo,nmse_percent,ssim\n";
  for (auto const &r : reports) {
    for (size_t t = 0; t < r.echoNmse.size(); t++) {
      os << fmt::format("{},{},{:.6f},{:.6f}\n", r.method, t, r.echoNmse[t], r.echoSsim[t]);
    }
  }
}

} // namespace zs
