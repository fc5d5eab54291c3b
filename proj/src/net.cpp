#include "zsfse/net.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace zs {

void NetArch::validate() const
{
  if (inChannels < 2 || inChannels % 2 != 0) {
    throw InvalidArgument(fmt::format("network input channels must be even and >= 2, got {}", inChannels));
  }
  if (hidden < 1) { throw InvalidArgument("network needs at least one hidden channel"); }
  if (blocks < 1) { throw InvalidArgument("network needs at least one residual block"); }
}

auto LayerTable(NetArch const &arch) -> std::vector<LayerShape>
{
  arch.validate();
  std::vector<LayerShape> t;
  Index off = 0;
  auto add = [&](std::string name, Index out, Index in, Index k) {
    LayerShape l{std::move(name), out, in, k, off, off + out * in * k * k};
    off = l.biasOffset + out;
    t.push_back(std::move(l));
  };
  add("head", arch.hidden, arch.inChannels, 3);
  for (Index b = 0; b < arch.blocks; b++) {
    add(fmt::format("block{}.a", b), arch.hidden, arch.hidden, 3);
    add(fmt::format("block{}.b", b), arch.hidden, arch.hidden, 3);
  }
  add("tail", arch.inChannels, arch.hidden, 1);
  return t;
}

auto NetArch::paramCount() const -> Index
{
  auto const t = LayerTable(*this);
  return t.back().biasOffset + t.back().out;
}

auto NetArch::describe() const -> std::string
{
  return fmt::format("resnet in={} hidden={} blocks={} kernel=3x3 act=relu tail=1x1", inChannels, hidden, blocks);
}

auto InitParams(NetArch const &arch, std::uint64_t seed) -> NetParams
{
  NetParams p;
  p.arch = arch;
  p.seed = seed;
  p.values = Eigen::VectorXd::Zero(arch.paramCount());
  std::mt19937_64 rng(seed);
  for (auto const &l : LayerTable(arch)) {
    if (l.name == "tail") { continue; }
    std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / static_cast<double>(l.fanIn())));
    for (Index i = 0; i < l.out * l.fanIn(); i++) { p.values[l.weightOffset + i] = nd(rng); }
  }
  return p;
}

template <typename S>
ConvResNet<S>::ConvResNet(NetArch arch, Eigen::VectorXd const &params, Index paramStep)
  : arch_(arch)
  , layers_(LayerTable(arch))
  , p_(params.cast<S>())
  , step_(paramStep)
{
  if (params.size() != arch_.paramCount()) {
    throw ShapeError(fmt::format("parameter vector has {} entries, architecture needs {}", params.size(), arch_.paramCount()));
  }
}

namespace {

// Copy src shifted by (dw, dh) into dst with zero fill: dst(w, h) = src(w + dw, h + dh).
template <typename Col, typename SrcCol>
void ShiftCopy(SrcCol const &src, Col &&dst, Index w, Index h, Index dw, Index dh)
{
  Index const h0 = std::max<Index>(0, -dh), h1 = h - std::max<Index>(0, dh);
  Index const w0 = std::max<Index>(0, -dw), w1 = w - std::max<Index>(0, dw);
  dst.setZero();
  if (h1 <= h0) { return; }
  for (Index x = w0; x < w1; x++) {
    dst.segment(x * h + h0, h1 - h0) = src.segment((x + dw) * h + h0 + dh, h1 - h0);
  }
}

// Adjoint of ShiftCopy: acc(w + dw, h + dh) += g(w, h).
template <typename Col, typename SrcCol>
void ShiftAccumulate(SrcCol const &g, Col &&acc, Index w, Index h, Index dw, Index dh)
{
  Index const h0 = std::max<Index>(0, -dh), h1 = h - std::max<Index>(0, dh);
  Index const w0 = std::max<Index>(0, -dw), w1 = w - std::max<Index>(0, dw);
  if (h1 <= h0) { return; }
  for (Index x = w0; x < w1; x++) {
    acc.segment((x + dw) * h + h0 + dh, h1 - h0) += g.segment(x * h + h0, h1 - h0);
  }
}

template <typename Mat>
auto Im2Col(Mat const &x, Index w, Index h, Index k) -> Mat
{
  if (k == 1) { return x; }
  Index const r = k / 2;
  Mat col(x.rows(), x.cols() * k * k);
  for (Index c = 0; c < x.cols(); c++) {
    for (Index i = 0; i < k; i++) {
      for (Index j = 0; j < k; j++) {
        ShiftCopy(x.col(c), col.col(c * k * k + i * k + j), w, h, i - r, j - r);
      }
    }
  }
  return col;
}

template <typename Mat>
auto Col2Im(Mat const &col, Index channels, Index w, Index h, Index k) -> Mat
{
  if (k == 1) { return col; }
  Index const r = k / 2;
  Mat x = Mat::Zero(col.rows(), channels);
  for (Index c = 0; c < channels; c++) {
    for (Index i = 0; i < k; i++) {
      for (Index j = 0; j < k; j++) {
        ShiftAccumulate(col.col(c * k * k + i * k + j), x.col(c), w, h, i - r, j - r);
      }
    }
  }
  return x;
}

} // namespace

template <typename S>
auto ConvResNet<S>::conv(LayerShape const &l, Mat const &x, Index w, Index h) const -> Mat
{
  Eigen::Map<Mat const> const wt(p_.data() + l.weightOffset, l.out, l.fanIn());
  Eigen::Map<Vec const> const b(p_.data() + l.biasOffset, l.out);
  Mat y(x.rows(), l.out);
  y.noalias() = Im2Col(x, w, h, l.kernel) * wt.transpose();
  y.rowwise() += b.transpose();
  return y;
}

template <typename S>
auto ConvResNet<S>::convBackward(LayerShape const &l, Mat const &x, Mat const &gy, Index w, Index h,
                                 Vec &gParams, bool needInput) const -> Mat
{
  Eigen::Map<Mat const> const wt(p_.data() + l.weightOffset, l.out, l.fanIn());
  Eigen::Map<Mat> gw(gParams.data() + l.weightOffset, l.out, l.fanIn());
  Eigen::Map<Vec> gb(gParams.data() + l.biasOffset, l.out);
  gw.noalias() += gy.transpose() * Im2Col(x, w, h, l.kernel);
  gb += gy.colwise().sum().transpose();
  if (!needInput) { return Mat(); }
  Mat gcol(gy.rows(), l.fanIn());
  gcol.noalias() = gy * wt;
  return Col2Im(gcol, l.in, w, h, l.kernel);
}

template <typename S>
auto ConvResNet<S>::forward(Mat const &x, Index w, Index h, Cache *cache) const -> Mat
{
  if (x.cols() != arch_.inChannels || x.rows() != w * h) {
    throw ShapeError(fmt::format("network input is {}x{}, expected {}x{}", x.rows(), x.cols(), w * h, arch_.inChannels));
  }
  Mat hcur = conv(layers_[0], x, w, h).cwiseMax(S(0));
  if (cache) {
    cache->w = w;
    cache->h = h;
    cache->paramStep = step_;
    cache->input = x;
    cache->head = hcur;
    cache->blockIn.clear();
    cache->blockMid.clear();
  }
  for (Index b = 0; b < arch_.blocks; b++) {
    auto const &la = layers_[static_cast<size_t>(1 + 2 * b)];
    auto const &lb = layers_[static_cast<size_t>(2 + 2 * b)];
    Mat mid = conv(la, hcur, w, h);
    Mat const act = mid.cwiseMax(S(0));
    Mat next = hcur + conv(lb, act, w, h);
    if (cache) {
      cache->blockIn.push_back(std::move(hcur));
      cache->blockMid.push_back(std::move(mid));
    }
    hcur = std::move(next);
  }
  Mat y = x + conv(layers_.back(), hcur, w, h);
  if (cache) { cache->last = std::move(hcur); }
  return y;
}

template <typename S>
auto ConvResNet<S>::backward(Cache const &cache, Mat const &gOut, Vec &gParams) const -> Mat
{
  if (cache.paramStep != step_ || cache.input.cols() != arch_.inChannels) {
    throw InvalidArgument("stale network cache: parameters changed since the forward pass");
  }
  if (gOut.rows() != cache.input.rows() || gOut.cols() != cache.input.cols()) {
    throw ShapeError("network output gradient has the wrong shape");
  }
  if (gParams.size() != p_.size()) { gParams = Vec::Zero(p_.size()); }
  Index const w = cache.w, h = cache.h;
  Mat gx = gOut;
  Mat gh = convBackward(layers_.back(), cache.last, gOut, w, h, gParams, true);
  for (Index b = arch_.blocks - 1; b >= 0; b--) {
    auto const &la = layers_[static_cast<size_t>(1 + 2 * b)];
    auto const &lb = layers_[static_cast<size_t>(2 + 2 * b)];
    Mat const &mid = cache.blockMid[static_cast<size_t>(b)];
    Mat const act = mid.cwiseMax(S(0));
    Mat gAct = convBackward(lb, act, gh, w, h, gParams, true);
    gAct = (mid.array() > S(0)).select(gAct, S(0));
    gh += convBackward(la, cache.blockIn[static_cast<size_t>(b)], gAct, w, h, gParams, true);
  }
  Mat const gPre = (cache.head.array() > S(0)).select(gh, S(0));
  gx += convBackward(layers_[0], cache.input, gPre, w, h, gParams, true);
  return gx;
}

template class ConvResNet<float>;
template class ConvResNet<double>;

Regularizer::Regularizer(NetParams const &params, Index group, Precision precision)
  : group_(group)
  , precision_(precision)
  , netF_(params.arch, precision == Precision::Single ? params.values : Eigen::VectorXd::Zero(params.arch.paramCount()), params.step)
  , netD_(params.arch, precision == Precision::Double ? params.values : Eigen::VectorXd::Zero(params.arch.paramCount()), params.step)
{
  if (2 * group_ != params.arch.inChannels) {
    throw ShapeError(fmt::format("group of {} complex channels does not match a {}-channel network", group_, params.arch.inChannels));
  }
}

namespace {

template <typename S, typename Tag>
auto ApplyGroups(ConvResNet<S> const &net, Stack<Tag> const &x, Index group,
                 std::vector<typename ConvResNet<S>::Cache> *caches) -> Stack<Tag>
{
  if (x.size() % group != 0) { throw ShapeError("stack size is not a multiple of the network group"); }
  Stack<Tag> out = Stack<Tag>::zerosLike(x);
  Index const n = x.size() / group;
  if (caches) { caches->assign(static_cast<size_t>(n), {}); }
  for (Index g = 0; g < n; g++) {
    auto const in = ToChannels<S>(x, g * group, group);
    auto *c = caches ? &(*caches)[static_cast<size_t>(g)] : nullptr;
    FromChannels<S>(net.forward(in, x.width(), x.height(), c), out, g * group);
  }
  return out;
}

template <typename S, typename Tag>
auto BackwardGroups(ConvResNet<S> const &net, std::vector<typename ConvResNet<S>::Cache> const &caches,
                    Stack<Tag> const &gOut, Index group, Eigen::VectorXd &gParams) -> Stack<Tag>
{
  if (static_cast<Index>(caches.size()) * group != gOut.size()) {
    throw InvalidArgument("stale regularizer cache: group count differs from the gradient");
  }
  Stack<Tag> gIn = Stack<Tag>::zerosLike(gOut);
  typename ConvResNet<S>::Vec gp = ConvResNet<S>::Vec::Zero(gParams.size());
  for (size_t g = 0; g < caches.size(); g++) {
    auto const go = ToChannels<S>(gOut, static_cast<Index>(g) * group, group);
    FromChannels<S>(net.backward(caches[g], go, gp), gIn, static_cast<Index>(g) * group);
  }
  gParams += gp.template cast<double>();
  return gIn;
}

} // namespace

template <typename Tag>
auto Regularizer::apply(Stack<Tag> const &x, Cache *cache) const -> Stack<Tag>
{
  if (precision_ == Precision::Single) { return ApplyGroups(netF_, x, group_, cache ? &cache->f : nullptr); }
  return ApplyGroups(netD_, x, group_, cache ? &cache->d : nullptr);
}

template <typename Tag>
auto Regularizer::backward(Cache const &cache, Stack<Tag> const &gOut, Eigen::VectorXd &gParams) const
  -> Stack<Tag>
{
  if (gParams.size() != netF_.arch().paramCount()) { gParams = Eigen::VectorXd::Zero(netF_.arch().paramCount()); }
  if (precision_ == Precision::Single) { return BackwardGroups(netF_, cache.f, gOut, group_, gParams); }
  return BackwardGroups(netD_, cache.d, gOut, group_, gParams);
}

template auto Regularizer::apply(CoeffMaps const &, Cache *) const -> CoeffMaps;
template auto Regularizer::apply(SensMaps const &, Cache *) const -> SensMaps;
template auto Regularizer::apply(EchoImages const &, Cache *) const -> EchoImages;
template auto Regularizer::backward(Cache const &, CoeffMaps const &, Eigen::VectorXd &) const -> CoeffMaps;
template auto Regularizer::backward(Cache const &, SensMaps const &, Eigen::VectorXd &) const -> SensMaps;
template auto Regularizer::backward(Cache const &, EchoImages const &, Eigen::VectorXd &) const -> EchoImages;

auto AdamState::ForParams(NetParams const &p, double lr) -> AdamState
{
  AdamState s;
  s.m = Eigen::VectorXd::Zero(p.values.size());
  s.v = Eigen::VectorXd::Zero(p.values.size());
  s.lr = lr;
  return s;
}

void AdamStep(NetParams &params, Eigen::VectorXd const &grads, AdamState &state)
{
  if (grads.size() != params.values.size() || state.m.size() != grads.size() || state.v.size() != grads.size()) {
    throw ShapeError("Adam: gradient, moment, and parameter lengths differ");
  }
  if (!grads.allFinite()) { throw NumericalError(fmt::format("non-finite gradient at optimizer step {}", state.step + 1)); }
  state.step++;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  double const c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double const c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.values.array() -= state.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
  params.step++;
}

void SaveCheckpoint(std::filesystem::path const &stem, NetParams const &p)
{
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");
  std::ofstream hdr(stem.string() + ".hdr");
  hdr << "format zsfse-netparams-1\n"
      << fmt::format("in_channels {}\nhidden {}\nblocks {}\n", p.arch.inChannels, p.arch.hidden, p.arch.blocks)
      << fmt::format("seed {}\nstep {}\ncount {}\nelement float64\nendianness little\n", p.seed, p.step, p.values.size());
  std::ofstream bin(stem.string() + ".bin", std::ios::binary);
  bin.write(reinterpret_cast<char const *>(p.values.data()), static_cast<std::streamsize>(p.values.size() * 8));
  if (!hdr || !bin) { throw IoError("failed to write checkpoint " + stem.string()); }
}

auto LoadCheckpoint(std::filesystem::path const &stem) -> NetParams
{
  std::ifstream hdr(stem.string() + ".hdr");
  if (!hdr) { throw IoError("missing checkpoint header " + stem.string() + ".hdr"); }
  NetParams p;
  Index count = -1;
  std::string key;
  std::string value;
  while (hdr >> key >> value) {
    if (key == "in_channels") { p.arch.inChannels = std::stol(value); }
    else if (key == "hidden") { p.arch.hidden = std::stol(value); }
    else if (key == "blocks") { p.arch.blocks = std::stol(value); }
    else if (key == "seed") { p.seed = std::stoull(value); }
    else if (key == "step") { p.step = std::stol(value); }
    else if (key == "count") { count = std::stol(value); }
  }
  if (count != p.arch.paramCount()) { throw IoError("checkpoint parameter count does not match its architecture"); }
  p.values.resize(count);
  std::ifstream bin(stem.string() + ".bin", std::ios::binary);
  bin.read(reinterpret_cast<char *>(p.values.data()), static_cast<std::streamsize>(count * 8));
  if (!bin || bin.gcount() != count * 8) { throw IoError("truncated checkpoint payload " + stem.string() + ".bin"); }
  return p;
}

} // namespace zs
