#include "zsfse/recon.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "zsfse/fft.hpp"

namespace zs {

void UnrollConfig::validate() const
{
  if (nBlocks < 0) { throw InvalidArgument("number of unrolled blocks must be >= 0"); }
  if (!(muI > 0.0) || !(muC > 0.0)) { throw InvalidArgument("DC weights must be positive"); }
  if (!(lambdaC >= 0.0)) { throw InvalidArgument("smoothness weight must be >= 0"); }
  if (stepsPerStage < 0) { throw InvalidArgument("steps per stage must be >= 0"); }
  if (!(lrI1 > 0.0) || !(lrI1Late > 0.0) || !(lrI2 > 0.0) || !(lrC1 > 0.0)) {
    throw InvalidArgument("learning rates must be positive");
  }
  if (!(inputPeak > 0.0)) { throw InvalidArgument("input scale must be positive"); }
  if (ssduEchoBatch < 1 || ssduInferBatch < 1) { throw InvalidArgument("echo batch sizes must be >= 1"); }
  cg.validate();
  NetArch{2, hidden, netBlocks}.validate();
}

namespace {

// Epoch ranges keep partitions of different stages (and the held-out
// validation partition) apart.
constexpr std::uint64_t kValidationEpoch = std::uint64_t{1} << 40;
constexpr std::uint64_t kStageEpochStride = std::uint64_t{1} << 24;

template <typename Tag>
auto MaxAbs(Stack<Tag> const &s) -> double
{
  double m = 0.0;
  for (auto const &im : s.data) { m = std::max(m, im.abs().maxCoeff()); }
  return m;
}

auto Scaled(EchoSeriesKSpace y, double s) -> EchoSeriesKSpace
{
  for (auto &e : y.echoes) { e *= Cx{s}; }
  return y;
}

/// mu (N + mu I)^{-1} g by CG from zero.
template <typename V, typename Op>
auto RegularizedInverse(Op const &normal, V const &g, double mu, CgConfig const &cfg) -> V
{
  auto op = [&](V const &v) {
    V out = normal(v);
    axpy(Cx{mu}, v, out);
    return out;
  };
  V x = CgSolve(op, g, cfg).x;
  x *= Cx{mu};
  return x;
}

// Everything one training step needs, built on a fresh Theta / Lambda split.
template <typename V>
struct StepOps
{
  V init;
  LinearMap<V> dc;
  LinearMap<V> dcJacobianT;
  EchoSeriesKSpace target; // Y on Lambda
  std::function<EchoSeriesKSpace(V const &)> predict; // M_Lambda A v
  std::function<V(EchoSeriesKSpace const &)> predictAdjoint;
};

template <typename V>
struct TrainPlan
{
  std::function<StepOps<V>(Index step)> setup;
  std::function<StepOps<V>()> validation;
  std::function<double(Index step)> lr;
  Index group = 1;
  Index steps = 0;
  Index nBlocks = 0;
  Precision precision = Precision::Single;
};

template <typename V>
auto HeldOutLoss(TrainPlan<V> const &plan, NetParams const &params) -> double
{
  auto const ops = plan.validation();
  Regularizer const net(params, plan.group, plan.precision);
  V const out = UnrolledForward(ops.init, net, ops.dc, plan.nBlocks);
  return SsduLoss(ops.target, ops.predict(out));
}

template <typename V>
struct StepEval
{
  double loss = 0.0;
  Eigen::VectorXd grads;
};

template <typename V>
auto EvalStep(StepOps<V> const &ops, NetParams const &params, Index group, Precision precision, Index nBlocks)
  -> StepEval<V>
{
  Regularizer const net(params, group, precision);
  std::vector<Regularizer::Cache> caches;
  V const out = UnrolledForward(ops.init, net, ops.dc, nBlocks, &caches);
  auto const lg = SsduLossGrad(ops.target, ops.predict(out));
  StepEval<V> r{lg.value, Eigen::VectorXd::Zero(params.values.size())};
  if (std::isfinite(lg.value)) { UnrolledBackward(caches, net, ops.dcJacobianT, ops.predictAdjoint(lg.grad), r.grads); }
  return r;
}

template <typename V>
void Train(TrainPlan<V> const &plan, NetParams &params, StageResult &res)
{
  res.validationStart = HeldOutLoss(plan, params);
  auto adam = AdamState::ForParams(params, plan.lr(0));
  for (Index step = 0; step < plan.steps; step++) {
    auto const ev = EvalStep(plan.setup(step), params, plan.group, plan.precision, plan.nBlocks);
    if (!std::isfinite(ev.loss)) {
      throw NumericalError(fmt::format("{}: non-finite loss at step {} (trace so far: {} steps)", res.stage, step,
                                       res.loss.size()));
    }
    res.loss.push_back(ev.loss);
    adam.lr = plan.lr(step);
    AdamStep(params, ev.grads, adam);
  }
  res.validationEnd = HeldOutLoss(plan, params);
}

auto StagePartition(UnrollConfig const &cfg) -> PartitionSpec
{
  PartitionSpec p = cfg.partition;
  p.seed = cfg.seed;
  return p;
}

auto StageIndex(std::string const &stage) -> std::uint64_t
{
  if (stage == "I1") { return 0; }
  if (stage == "C1") { return 1; }
  if (stage == "I2") { return 2; }
  if (stage == "SSDU") { return 3; }
  return 4;
}

auto MakeImageOps(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                  Partition const &part, UnrollConfig const &cfg) -> StepOps<CoeffMaps>
{
  auto const dc = std::make_shared<ImageDcOps const>(y, basis, sens, part.theta, cfg.muI, cfg.cg);
  auto const lambda = std::make_shared<SamplingMask const>(part.lambda);
  StepOps<CoeffMaps> ops;
  ops.init = dc->ctx.adjointData;
  ops.dc = [dc](CoeffMaps const &z) { return dc->solve(z); };
  ops.dcJacobianT = [dc](CoeffMaps const &g) { return dc->jacobianT(g); };
  ops.target = ApplyMask(y, part.lambda);
  ops.predict = [&basis, &sens, lambda](CoeffMaps const &a) { return ForwardSubspace(a, basis, sens, *lambda); };
  ops.predictAdjoint = [&basis, &sens, lambda](EchoSeriesKSpace const &k) {
    return AdjointSubspace(k, basis, sens, *lambda);
  };
  return ops;
}

auto SelectEchoes(EchoSeriesKSpace const &y, std::vector<Index> const &echoes) -> EchoSeriesKSpace
{
  EchoSeriesKSpace out;
  out.mask = y.mask.select(echoes);
  for (Index t : echoes) { out.echoes.push_back(y[t]); }
  return out;
}

auto MakeEchoOps(EchoSeriesKSpace const &y, SensMaps const &sens, Partition const &part,
                 std::vector<Index> const &echoes, UnrollConfig const &cfg) -> StepOps<EchoImages>
{
  auto const ySub = SelectEchoes(y, echoes);
  auto const theta = part.theta.select(echoes);
  auto const lambda = std::make_shared<SamplingMask const>(part.lambda.select(echoes));
  auto const ctx = std::make_shared<ImagesDcContext const>(ySub, sens, theta);
  double const mu = cfg.muI;
  CgConfig const cg = cfg.cg;
  StepOps<EchoImages> ops;
  ops.init = ctx->adjointData;
  ops.dc = [ctx, mu, cg](EchoImages const &z) { return DcSolveImages(*ctx, z, mu, cg).x; };
  ops.dcJacobianT = [ctx, mu, cg](EchoImages const &g) { return RegularizedInverse(ctx->normal, g, mu, cg); };
  ops.target = ApplyMask(ySub, *lambda);
  ops.predict = [&sens, lambda](EchoImages const &x) { return ForwardImages(x, sens, *lambda); };
  ops.predictAdjoint = [&sens, lambda](EchoSeriesKSpace const &k) { return AdjointImages(k, sens, *lambda); };
  return ops;
}

auto MakeSensOps(EchoSeriesKSpace const &y, EchoImages const &x, SensMaps const &init, Partition const &part,
                 UnrollConfig const &cfg) -> StepOps<SensMaps>
{
  auto const ctx = std::make_shared<SensDcContext const>(y, x, part.theta);
  auto const lambda = std::make_shared<SamplingMask const>(part.lambda);
  double const mu = cfg.muC, lam = cfg.lambdaC;
  CgConfig const cg = cfg.cg;
  StepOps<SensMaps> ops;
  ops.init = init;
  ops.dc = [ctx, mu, lam, cg](SensMaps const &z) { return DcSolveSens(*ctx, z, mu, lam, cg).x; };
  ops.dcJacobianT = [ctx, mu, lam, cg](SensMaps const &g) {
    auto normal = [&](SensMaps const &s) {
      SensMaps out = ctx->normal(s);
      if (lam > 0.0) { axpy(Cx{lam}, SpatialGradientAdjoint(SpatialGradient(s)), out); }
      return out;
    };
    return RegularizedInverse(normal, g, mu, cg);
  };
  ops.target = ApplyMask(y, part.lambda);
  ops.predict = [&x, lambda](SensMaps const &s) { return ForwardSens(s, x, *lambda); };
  ops.predictAdjoint = [&x, lambda](EchoSeriesKSpace const &k) { return AdjointSens(k, x, *lambda); };
  return ops;
}

} // namespace

auto ReconZeroFilled(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens) -> CoeffMaps
{
  return AdjointSubspace(y, basis, sens, y.mask);
}

auto ReconCgSense(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens, CgConfig const &cfg,
                  double tikhonov) -> CoeffMaps
{
  if (!(tikhonov >= 0.0)) { throw InvalidArgument("Tikhonov weight must be >= 0"); }
  SubspaceNormal const normal(basis, sens, y.mask);
  auto op = [&](CoeffMaps const &a) {
    CoeffMaps out = normal(a);
    if (tikhonov > 0.0) { axpy(Cx{tikhonov}, a, out); }
    return out;
  };
  return CgSolve(op, AdjointSubspace(y, basis, sens, y.mask), cfg).x;
}

auto ReconShuffling(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                    ShufflingConfig const &cfg) -> ShufflingResult
{
  FistaConfig fc = cfg.fista;
  if (cfg.relativeL1 > 0.0) {
    CoeffMaps const ahy = AdjointSubspace(y, basis, sens, y.mask);
    double m = 0.0;
    for (auto const &im : ahy.data) { m = std::max(m, Dwt2(im, fc.levels).abs().maxCoeff()); }
    fc.l1Weight = cfg.relativeL1 * m;
  }
  auto fr = FistaL1Wavelet(y, basis, sens, y.mask, fc);
  ShufflingResult r{std::move(fr.alpha), {}, std::move(fr.objective)};
  r.images = Expand(basis, r.alpha);
  return r;
}

ImageDcOps::ImageDcOps(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                       SamplingMask const &mask, double mu_, CgConfig cg_)
  : ctx(y, basis, sens, mask)
  , mu(mu_)
  , cg(cg_)
{
}

auto ImageDcOps::solve(CoeffMaps const &z) const -> CoeffMaps { return DcSolveImage(ctx, z, mu, cg).x; }

auto ImageDcOps::jacobianT(CoeffMaps const &g) const -> CoeffMaps { return ImplicitDcGradient(g, ctx, mu, cg); }

auto ImplicitDcGradient(CoeffMaps const &g, ImageDcContext const &ctx, double mu, CgConfig const &cfg) -> CoeffMaps
{
  if (!(mu > 0.0)) { throw InvalidArgument("implicit DC gradient needs mu > 0"); }
  checkSameShape(g, ctx.adjointData, "ImplicitDcGradient");
  return RegularizedInverse(ctx.normal, g, mu, cfg);
}

auto ImageStageLossGrad(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                        Partition const &part, NetParams const &params, UnrollConfig const &cfg) -> LossGradient
{
  auto const ev = EvalStep(MakeImageOps(y, basis, sens, part, cfg), params, basis.rank(), cfg.precision, cfg.nBlocks);
  return {ev.loss, ev.grads};
}

auto SensStageLossGrad(EchoSeriesKSpace const &y, EchoImages const &x, SensMaps const &init, Partition const &part,
                       NetParams const &params, UnrollConfig const &cfg) -> LossGradient
{
  auto const ev = EvalStep(MakeSensOps(y, x, init, part, cfg), params, y.coils(), cfg.precision, cfg.nBlocks);
  return {ev.loss, ev.grads};
}

auto StageArch(UnrollConfig const &cfg, Index complexChannels) -> NetArch
{
  return NetArch{2 * complexChannels, cfg.hidden, cfg.netBlocks};
}

auto ZsUnrolledForward(CoeffMaps const &alpha0, EchoSeriesKSpace const &yTheta, SubspaceBasis const &basis,
                       SensMaps const &sens, NetParams const &params, UnrollConfig const &cfg) -> CoeffMaps
{
  ImageDcOps const dc(yTheta, basis, sens, yTheta.mask, cfg.muI, cfg.cg);
  Regularizer const net(params, basis.rank(), cfg.precision);
  return UnrolledForward<CoeffMaps>(alpha0, net, [&](CoeffMaps const &z) { return dc.solve(z); }, cfg.nBlocks);
}

auto TrainImageStage(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                     UnrollConfig const &cfg, std::string const &stage, NetParams const *init) -> StageResult
{
  cfg.validate();
  if (sens.width() != y.width() || sens.height() != y.height() || sens.size() != y.coils()) {
    throw ShapeError("image stage: coil maps do not match the k-space");
  }
  CoeffMaps const ahy = AdjointSubspace(y, basis, sens, y.mask);
  double const peak = MaxAbs(ahy);
  if (!(peak > 0.0)) { throw InvalidArgument("image stage: no signal in the acquired data"); }
  double const scale = cfg.inputPeak / peak;
  EchoSeriesKSpace const ys = Scaled(y, scale);

  StageResult res;
  res.stage = stage;
  res.config = cfg;
  NetArch const arch = StageArch(cfg, basis.rank());
  if (init) {
    if (!(init->arch == arch)) { throw InvalidArgument("image stage: inherited network has another architecture"); }
    res.params = *init;
  } else {
    res.params = InitParams(arch, cfg.seed * 7919u + StageIndex(stage));
  }
  PartitionSpec const pspec = StagePartition(cfg);
  std::uint64_t const epoch0 = StageIndex(stage) * kStageEpochStride;

  TrainPlan<CoeffMaps> plan;
  plan.group = basis.rank();
  plan.steps = cfg.stepsPerStage;
  plan.nBlocks = cfg.nBlocks;
  plan.precision = cfg.precision;
  plan.setup = [&](Index step) {
    return MakeImageOps(ys, basis, sens, PartitionThetaLambda(y.mask, pspec, epoch0 + static_cast<std::uint64_t>(step)),
                        cfg);
  };
  plan.validation = [&] { return MakeImageOps(ys, basis, sens, PartitionThetaLambda(y.mask, pspec, kValidationEpoch), cfg); };
  plan.lr = [&](Index step) {
    if (stage == "I1") { return step < cfg.lrDecayStep ? cfg.lrI1 : cfg.lrI1Late; }
    return cfg.lrI2;
  };
  Train(plan, res.params, res);

  // Inference with every acquired line in the DC term.
  ImageDcOps const full(ys, basis, sens, y.mask, cfg.muI, cfg.cg);
  Regularizer const net(res.params, basis.rank(), cfg.precision);
  res.alpha = UnrolledForward<CoeffMaps>(full.ctx.adjointData, net, [&](CoeffMaps const &z) { return full.solve(z); },
                                         cfg.nBlocks);
  res.alpha *= Cx{1.0 / scale};
  if (!allFinite(res.alpha)) { throw NumericalError(fmt::format("{}: non-finite reconstruction", stage)); }
  return res;
}

auto ReconSsduPerEcho(EchoSeriesKSpace const &y, SensMaps const &sens, UnrollConfig const &cfg) -> StageResult
{
  cfg.validate();
  Index const nt = y.echoCount();
  EchoImages const ahy = AdjointImages(y, sens, y.mask);
  double const peak = MaxAbs(ahy);
  if (!(peak > 0.0)) { throw InvalidArgument("per-echo baseline: no signal in the acquired data"); }
  double const scale = cfg.inputPeak / peak;
  EchoSeriesKSpace const ys = Scaled(y, scale);
  Index const batch = std::min(cfg.ssduEchoBatch, nt);

  StageResult res;
  res.stage = "SSDU";
  res.config = cfg;
  res.params = InitParams(StageArch(cfg, 1), cfg.seed * 7919u + StageIndex(res.stage));
  PartitionSpec const pspec = StagePartition(cfg);
  std::uint64_t const epoch0 = StageIndex(res.stage) * kStageEpochStride;

  std::vector<Index> valEchoes;
  for (Index i = 0; i < batch; i++) { valEchoes.push_back(i * nt / batch); }

  TrainPlan<EchoImages> plan;
  plan.group = 1;
  plan.steps = cfg.stepsPerStage;
  plan.nBlocks = cfg.nBlocks;
  plan.precision = cfg.precision;
  plan.setup = [&](Index step) {
    std::uint64_t const epoch = epoch0 + static_cast<std::uint64_t>(step);
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(epoch), 0x55D0u};
    std::mt19937_64 rng(seq);
    std::vector<Index> all(static_cast<size_t>(nt));
    std::iota(all.begin(), all.end(), Index{0});
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<size_t>(batch));
    return MakeEchoOps(ys, sens, PartitionThetaLambda(y.mask, pspec, epoch), all, cfg);
  };
  plan.validation = [&] {
    return MakeEchoOps(ys, sens, PartitionThetaLambda(y.mask, pspec, kValidationEpoch), valEchoes, cfg);
  };
  plan.lr = [&](Index step) { return step < cfg.lrDecayStep ? cfg.lrI1 : cfg.lrI1Late; };
  Train(plan, res.params, res);

  Regularizer const net(res.params, 1, cfg.precision);
  res.images = EchoImages(nt, y.width(), y.height());
  for (Index t0 = 0; t0 < nt; t0 += cfg.ssduInferBatch) {
    std::vector<Index> echoes;
    for (Index t = t0; t < std::min(nt, t0 + cfg.ssduInferBatch); t++) { echoes.push_back(t); }
    auto const ySub = SelectEchoes(ys, echoes);
    ImagesDcContext const ctx(ySub, sens, ySub.mask);
    EchoImages const out = UnrolledForward<EchoImages>(
      ctx.adjointData, net, [&](EchoImages const &z) { return DcSolveImages(ctx, z, cfg.muI, cfg.cg).x; }, cfg.nBlocks);
    for (size_t i = 0; i < echoes.size(); i++) { res.images[echoes[i]] = out[static_cast<Index>(i)] / scale; }
  }
  if (!allFinite(res.images)) { throw NumericalError("per-echo baseline: non-finite reconstruction"); }
  return res;
}

auto NormalizeSensMaps(SensMaps s, double floor) -> SensMaps
{
  if (s.size() == 0) { return s; }
  ReImage rss = ReImage::Zero(s.width(), s.height());
  for (auto const &m : s.data) { rss += m.abs2(); }
  rss = rss.sqrt();
  double const cut = floor * rss.maxCoeff();
  ReImage const inv = (rss > cut && rss > 0.0).select(1.0 / rss, 0.0);
  for (auto &m : s.data) { m *= inv.cast<Cx>(); }
  return s;
}

auto CalibLowresMaps(EchoSeriesKSpace const &y, Index nCenter) -> SensMaps
{
  if (nCenter < 1) { throw InvalidArgument("calibration needs at least one central line"); }
  Index const h = y.height(), w = y.width();
  auto const acs = CenterLines(h, nCenter);
  SensMaps maps(y.coils(), w, h);
  for (size_t j = 0; j < acs.size(); j++) {
    Index const ky = acs[j];
    Index n = 0;
    for (Index t = 0; t < y.echoCount(); t++) { n += y.mask(t, ky) ? 1 : 0; }
    if (n == 0) { throw InvalidArgument(fmt::format("calibration line ky={} is never acquired", ky)); }
    double const s = std::sin(std::numbers::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(nCenter));
    double const win = s * s / static_cast<double>(n);
    for (Index c = 0; c < y.coils(); c++) {
      for (Index t = 0; t < y.echoCount(); t++) {
        if (y.mask(t, ky)) { maps[c].col(ky) += win * y[t][c].col(ky); }
      }
    }
  }
  for (auto &m : maps.data) { Fft2(m, true); }
  return NormalizeSensMaps(std::move(maps), 0.05);
}

auto TrainSensStage(EchoSeriesKSpace const &y, EchoImages const &x, SensMaps const &init, UnrollConfig const &cfg)
  -> StageResult
{
  cfg.validate();
  if (x.size() != y.echoCount() || x.width() != y.width() || x.height() != y.height()) {
    throw ShapeError("sensitivity stage: echo images do not match the k-space");
  }
  if (init.size() != y.coils() || init.width() != y.width() || init.height() != y.height()) {
    throw ShapeError("sensitivity stage: initial maps do not match the k-space");
  }
  double const peak = MaxAbs(x);
  if (!(peak > 0.0)) { throw InvalidArgument("sensitivity stage: echo images are zero"); }
  // Scaling X and Y together leaves S unchanged.
  double const scale = 1.0 / peak;
  EchoImages xs = x;
  xs *= Cx{scale};
  EchoSeriesKSpace const ys = Scaled(y, scale);

  StageResult res;
  res.stage = "C1";
  res.config = cfg;
  res.params = InitParams(StageArch(cfg, y.coils()), cfg.seed * 7919u + StageIndex(res.stage));
  PartitionSpec const pspec = StagePartition(cfg);
  std::uint64_t const epoch0 = StageIndex(res.stage) * kStageEpochStride;

  TrainPlan<SensMaps> plan;
  plan.group = y.coils();
  plan.steps = cfg.stepsPerStage;
  plan.nBlocks = cfg.nBlocks;
  plan.precision = cfg.precision;
  plan.setup = [&](Index step) {
    return MakeSensOps(ys, xs, init, PartitionThetaLambda(y.mask, pspec, epoch0 + static_cast<std::uint64_t>(step)),
                       cfg);
  };
  plan.validation = [&] { return MakeSensOps(ys, xs, init, PartitionThetaLambda(y.mask, pspec, kValidationEpoch), cfg); };
  plan.lr = [&](Index) { return cfg.lrC1; };
  Train(plan, res.params, res);

  SensDcContext const ctx(ys, xs, y.mask);
  Regularizer const net(res.params, y.coils(), cfg.precision);
  res.sens = UnrolledForward<SensMaps>(
    init, net, [&](SensMaps const &z) { return DcSolveSens(ctx, z, cfg.muC, cfg.lambdaC, cfg.cg).x; }, cfg.nBlocks);
  if (!allFinite(res.sens)) { throw NumericalError("sensitivity stage: non-finite maps"); }
  return res;
}

auto RunJointPipeline(EchoSeriesKSpace const &y, SubspaceBasis const &basis, UnrollConfig const &cfg,
                      JointOptions const &opts) -> JointResult
{
  JointResult out;
  out.calibration = opts.injectedMaps ? *opts.injectedMaps : CalibLowresMaps(y, opts.centerLines);
  auto i1 = TrainImageStage(y, basis, out.calibration, cfg, "I1");
  out.alpha = i1.alpha;
  out.sens = out.calibration;
  out.stages.push_back(std::move(i1));
  if (!opts.skipRefinement) {
    // I1 is frozen from here on: its parameters are only read.
    EchoImages const x1 = Expand(basis, out.stages.front().alpha);
    auto c1 = TrainSensStage(y, x1, out.calibration, cfg);
    out.sens = NormalizeSensMaps(c1.sens);
    out.stages.push_back(std::move(c1));
    NetParams const *inherit = cfg.inheritI2 ? &out.stages.front().params : nullptr;
    auto i2 = TrainImageStage(y, basis, out.sens, cfg, "I2", inherit);
    out.alpha = i2.alpha;
    out.stages.push_back(std::move(i2));
  }
  out.images = Expand(basis, out.alpha);
  return out;
}

} // namespace zs
