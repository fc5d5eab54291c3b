#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zsfse/array.hpp"

namespace zs {

/*
 * Residual CNN used as the learned regularizer:
 *   h = relu(conv3x3(x))
 *   h = h + conv3x3(relu(conv3x3(h)))     (repeated `blocks` times)
 *   y = x + conv1x1(h)
 * Complex inputs enter as interleaved (real, imag) channel pairs. Zero padding
 * at the borders, no normalisation layers.
 */
struct NetArch
{
  Index inChannels = 6; // real channels, 2 per complex channel
  Index hidden = 48;
  Index blocks = 4;

  void validate() const;
  auto paramCount() const -> Index;
  auto describe() const -> std::string;
  friend auto operator==(NetArch const &, NetArch const &) -> bool = default;
};

struct LayerShape
{
  std::string name;
  Index out = 0, in = 0, kernel = 0;
  Index weightOffset = 0, biasOffset = 0;

  auto fanIn() const -> Index { return in * kernel * kernel; }
};

auto LayerTable(NetArch const &arch) -> std::vector<LayerShape>;

struct NetParams
{
  NetArch arch;
  Eigen::VectorXd values;
  std::uint64_t seed = 0;
  Index step = 0; // bumped by every optimizer update
};

/// Kaiming-normal weights (std sqrt(2 / fan_in)), zero biases, and a zero
/// output layer so the initial network is exactly the identity.
auto InitParams(NetArch const &arch, std::uint64_t seed) -> NetParams;

template <typename S>
class ConvResNet
{
public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>; // pixels x channels
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  struct Cache
  {
    Index w = 0, h = 0;
    Index paramStep = -1;
    Mat input;
    Mat head; // relu output of the first conv
    std::vector<Mat> blockIn, blockMid; // block input, pre-activation of the inner conv
    Mat last;
  };

  ConvResNet(NetArch arch, Eigen::VectorXd const &params, Index paramStep = 0);

  auto forward(Mat const &x, Index w, Index h, Cache *cache = nullptr) const -> Mat;
  /// Returns the input gradient; parameter gradients are added to gParams.
  auto backward(Cache const &cache, Mat const &gOut, Vec &gParams) const -> Mat;

  auto arch() const -> NetArch const & { return arch_; }

private:
  NetArch arch_;
  std::vector<LayerShape> layers_;
  Vec p_;
  Index step_;

  auto conv(LayerShape const &l, Mat const &x, Index w, Index h) const -> Mat;
  auto convBackward(LayerShape const &l, Mat const &x, Mat const &gy, Index w, Index h, Vec &gParams,
                    bool needInput) const -> Mat;
};

extern template class ConvResNet<float>;
extern template class ConvResNet<double>;

/// Complex stack slice [first, first + n) -> pixels x 2n real matrix.
template <typename S, typename Tag>
auto ToChannels(Stack<Tag> const &x, Index first, Index n) -> Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>
{
  Index const p = x.width() * x.height();
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> m(p, 2 * n);
  for (Index i = 0; i < n; i++) {
    auto const flat = Eigen::Map<Eigen::VectorXcd const>(x[first + i].data(), p);
    m.col(2 * i) = flat.real().template cast<S>();
    m.col(2 * i + 1) = flat.imag().template cast<S>();
  }
  return m;
}

template <typename S, typename Tag>
void FromChannels(Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> const &m, Stack<Tag> &x, Index first)
{
  Index const p = x.width() * x.height();
  for (Index i = 0; i < m.cols() / 2; i++) {
    auto flat = Eigen::Map<Eigen::VectorXcd>(x[first + i].data(), p);
    for (Index j = 0; j < p; j++) {
      flat[j] = Cx{static_cast<double>(m(j, 2 * i)), static_cast<double>(m(j, 2 * i + 1))};
    }
  }
}

enum class Precision
{
  Single,
  Double
};

/*
 * A network applied to a complex stack in groups of `group` complex channels
 * (group = K for coefficient maps, C for coil maps, 1 for echo-by-echo use).
 * Gradients w.r.t. complex inputs follow d/dRe + i d/dIm.
 */
class Regularizer
{
public:
  struct Cache
  {
    std::vector<ConvResNet<float>::Cache> f;
    std::vector<ConvResNet<double>::Cache> d;
  };

  Regularizer(NetParams const &params, Index group, Precision precision);

  template <typename Tag>
  auto apply(Stack<Tag> const &x, Cache *cache = nullptr) const -> Stack<Tag>;
  template <typename Tag>
  auto backward(Cache const &cache, Stack<Tag> const &gOut, Eigen::VectorXd &gParams) const -> Stack<Tag>;

private:
  Index group_;
  Precision precision_;
  ConvResNet<float> netF_;
  ConvResNet<double> netD_;
};

struct AdamState
{
  Eigen::VectorXd m, v;
  Index step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static auto ForParams(NetParams const &p, double lr) -> AdamState;
};

/// Bias-corrected Adam update; throws NumericalError on non-finite gradients.
void AdamStep(NetParams &params, Eigen::VectorXd const &grads, AdamState &state);

// Checkpoints: <stem>.hdr (text: arch, seed, step, count) + <stem>.bin
// (little-endian float64 parameter vector).
void SaveCheckpoint(std::filesystem::path const &stem, NetParams const &p);
auto LoadCheckpoint(std::filesystem::path const &stem) -> NetParams;

} // namespace zs
