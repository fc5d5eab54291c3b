#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zsfse/masking.hpp"
#include "zsfse/net.hpp"
#include "zsfse/solvers.hpp"

namespace zs {

struct UnrollConfig
{
  Index nBlocks = 10;
  double muI = 0.05;
  double muC = 0.02;
  double lambdaC = 2.0;
  Index stepsPerStage = 100;
  double lrI1 = 5e-4;
  double lrI1Late = 5e-5; // after lrDecayStep steps
  Index lrDecayStep = 40;
  double lrI2 = 5e-5;
  double lrC1 = 5e-5;
  CgConfig cg{};
  Index hidden = 48;
  Index netBlocks = 4;
  Precision precision = Precision::Single;
  PartitionSpec partition{};
  std::uint64_t seed = 0;
  bool inheritI2 = false; // I2 continues from I1's weights instead of a fresh start
  Index ssduEchoBatch = 2; // echoes per step for the per-echo baseline
  Index ssduInferBatch = 8;
  double inputPeak = 1.0; // data are scaled so the adjoint image peaks here

  void validate() const;
};

struct StageResult
{
  std::string stage;
  CoeffMaps alpha; // image stages
  SensMaps sens; // sensitivity stage
  EchoImages images; // per-echo baseline
  NetParams params;
  std::vector<double> loss; // training loss per step
  double validationStart = 0.0; // held-out loss on a fixed partition
  double validationEnd = 0.0;
  UnrollConfig config;
};

// Baselines

/// alpha = A^H y over the acquired mask.
auto ReconZeroFilled(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens) -> CoeffMaps;

/// CG solution of the subspace least-squares problem (optionally Tikhonov).
auto ReconCgSense(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens, CgConfig const &cfg,
                  double tikhonov = 0.0) -> CoeffMaps;

struct ShufflingConfig
{
  FistaConfig fista{};
  /// l1 weight as a fraction of the largest wavelet coefficient of A^H y;
  /// used when > 0, otherwise fista.l1Weight is taken as absolute.
  double relativeL1 = 4e-3;
};

struct ShufflingResult
{
  CoeffMaps alpha;
  EchoImages images;
  std::vector<double> objective;
};

auto ReconShuffling(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                    ShufflingConfig const &cfg) -> ShufflingResult;

// Unrolled machinery, shared by every stage.

template <typename V>
using LinearMap = std::function<V(V const &)>;

/*
 * nBlocks alternations of z = D(x) and x = DC(z). Caches, when requested,
 * receive one entry per block for the backward pass.
 */
template <typename V>
auto UnrolledForward(V x, Regularizer const &net, LinearMap<V> const &dc, Index nBlocks,
                     std::vector<Regularizer::Cache> *caches = nullptr) -> V
{
  if (caches) { caches->assign(static_cast<size_t>(nBlocks), {}); }
  for (Index b = 0; b < nBlocks; b++) {
    V const z = net.apply(x, caches ? &(*caches)[static_cast<size_t>(b)] : nullptr);
    x = dc(z);
  }
  return x;
}

/// Reverse pass: alternates the DC Jacobian-transpose and the network
/// backward, accumulating parameter gradients. Returns the gradient at the
/// unrolled input.
template <typename V>
auto UnrolledBackward(std::vector<Regularizer::Cache> const &caches, Regularizer const &net,
                      LinearMap<V> const &dcJacobianT, V g, Eigen::VectorXd &gParams) -> V
{
  for (auto it = caches.rbegin(); it != caches.rend(); ++it) {
    V const gz = dcJacobianT(g);
    g = net.backward(*it, gz, gParams);
  }
  return g;
}

/// Subspace operators restricted to one mask: DC solve and its Jacobian.
struct ImageDcOps
{
  ImageDcContext ctx;
  double mu;
  CgConfig cg;

  ImageDcOps(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens, SamplingMask const &mask,
             double mu, CgConfig cg);

  auto solve(CoeffMaps const &z) const -> CoeffMaps;
  /// mu (A^H A + mu I)^{-1} g by CG.
  auto jacobianT(CoeffMaps const &g) const -> CoeffMaps;
};

/// mu (A^H A + mu I)^{-1} g for the image-side DC.
auto ImplicitDcGradient(CoeffMaps const &g, ImageDcContext const &ctx, double mu, CgConfig const &cfg) -> CoeffMaps;

/// Unrolled reconstruction of the image stage on the DC mask carried by y.
auto ZsUnrolledForward(CoeffMaps const &alpha0, EchoSeriesKSpace const &yTheta, SubspaceBasis const &basis,
                       SensMaps const &sens, NetParams const &params, UnrollConfig const &cfg) -> CoeffMaps;

/// Architecture used for a stage with `complexChannels` complex inputs.
auto StageArch(UnrollConfig const &cfg, Index complexChannels) -> NetArch;

struct LossGradient
{
  double loss = 0.0;
  Eigen::VectorXd grads; // d loss / d network parameters
};

/// Self-supervised loss of one unrolled pass on a given partition, with its
/// gradient by backpropagation. `y` must already be in the stage's scaling.
auto ImageStageLossGrad(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                        Partition const &part, NetParams const &params, UnrollConfig const &cfg) -> LossGradient;
auto SensStageLossGrad(EchoSeriesKSpace const &y, EchoImages const &x, SensMaps const &init, Partition const &part,
                       NetParams const &params, UnrollConfig const &cfg) -> LossGradient;

/// Zero-shot self-supervised training of the subspace image stage. `init`
/// continues from existing weights; otherwise the network starts at identity.
auto TrainImageStage(EchoSeriesKSpace const &y, SubspaceBasis const &basis, SensMaps const &sens,
                     UnrollConfig const &cfg, std::string const &stage, NetParams const *init = nullptr)
  -> StageResult;

/// Per-echo zero-shot baseline with no temporal model; one shared network is
/// applied to each echo image.
auto ReconSsduPerEcho(EchoSeriesKSpace const &y, SensMaps const &sens, UnrollConfig const &cfg) -> StageResult;

/// Low-resolution calibration maps from the central ky block.
auto CalibLowresMaps(EchoSeriesKSpace const &y, Index nCenter) -> SensMaps;

/// Per-pixel root-sum-of-squares normalisation; pixels below `floor` x max
/// RSS are zeroed.
auto NormalizeSensMaps(SensMaps s, double floor = 0.05) -> SensMaps;

/// Self-supervised sensitivity stage with frozen echo images.
auto TrainSensStage(EchoSeriesKSpace const &y, EchoImages const &x, SensMaps const &init, UnrollConfig const &cfg)
  -> StageResult;

struct JointOptions
{
  Index centerLines = 2;
  std::optional<SensMaps> injectedMaps; // replaces calibration
  bool skipRefinement = false; // stop after I1
};

struct JointResult
{
  CoeffMaps alpha;
  SensMaps sens; // maps used by the final image stage
  EchoImages images;
  SensMaps calibration;
  std::vector<StageResult> stages;
};

/// I1 with calibration maps -> freeze -> C1 on Phi alpha -> freeze -> I2 with the new maps.
auto RunJointPipeline(EchoSeriesKSpace const &y, SubspaceBasis const &basis, UnrollConfig const &cfg,
                      JointOptions const &opts) -> JointResult;

} // namespace zs
