#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "zsfse/error.hpp"

namespace zs {

using Index = Eigen::Index;
using Cx = std::complex<double>;

// Images are W x H, row-major: the height (ky) axis is contiguous, which
// matches the on-disk row-major layout and keeps 1D transforms along ky cheap.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using CxImage = Image<Cx>;
using ReImage = Image<double>;
using BoolImage = Image<bool>;

/// An ordered list of equally sized complex images with a tag that gives the
/// leading axis its meaning (echo, coefficient, coil). Distinct tags do not
/// convert into each other.
template <typename Tag>
struct Stack
{
  std::vector<CxImage> data;

  Stack() = default;
  Stack(Index n, Index w, Index h)
    : data(static_cast<size_t>(n), CxImage::Zero(w, h))
  {
  }
  explicit Stack(std::vector<CxImage> d)
    : data(std::move(d))
  {
  }

  auto size() const -> Index { return static_cast<Index>(data.size()); }
  auto width() const -> Index { return data.empty() ? 0 : data.front().rows(); }
  auto height() const -> Index { return data.empty() ? 0 : data.front().cols(); }

  auto operator[](Index i) -> CxImage & { return data[static_cast<size_t>(i)]; }
  auto operator[](Index i) const -> CxImage const & { return data[static_cast<size_t>(i)]; }

  void setZero()
  {
    for (auto &im : data) { im.setZero(); }
  }

  auto operator+=(Stack const &o) -> Stack &
  {
    for (Index i = 0; i < size(); i++) { (*this)[i] += o[i]; }
    return *this;
  }
  auto operator-=(Stack const &o) -> Stack &
  {
    for (Index i = 0; i < size(); i++) { (*this)[i] -= o[i]; }
    return *this;
  }
  auto operator*=(Cx s) -> Stack &
  {
    for (auto &im : data) { im *= s; }
    return *this;
  }

  friend auto operator+(Stack a, Stack const &b) -> Stack { return a += b; }
  friend auto operator-(Stack a, Stack const &b) -> Stack { return a -= b; }
  friend auto operator*(Cx s, Stack a) -> Stack { return a *= s; }

  static auto zerosLike(Stack const &o) -> Stack { return Stack(o.size(), o.width(), o.height()); }
};

struct EchoTag;
struct CoeffTag;
struct CoilTag;

/// X_T: one image per echo, [T, W, H].
using EchoImages = Stack<EchoTag>;
/// Latent coefficient maps alpha, [K, W, H].
using CoeffMaps = Stack<CoeffTag>;
/// Coil sensitivity maps, [C, W, H].
using SensMaps = Stack<CoilTag>;

// Vector-space primitives shared by the solvers. Any type with these
// overloads can be handed to the CG / FISTA templates.

template <typename Tag>
auto dotc(Stack<Tag> const &a, Stack<Tag> const &b) -> Cx
{
  Cx s{0.0, 0.0};
  for (Index i = 0; i < a.size(); i++) { s += (a[i].conjugate() * b[i]).sum(); }
  return s;
}

inline auto dotc(Eigen::VectorXcd const &a, Eigen::VectorXcd const &b) -> Cx { return a.dot(b); }

template <typename Tag>
void axpy(Cx alpha, Stack<Tag> const &x, Stack<Tag> &y)
{
  for (Index i = 0; i < y.size(); i++) { y[i] += alpha * x[i]; }
}

inline void axpy(Cx alpha, Eigen::VectorXcd const &x, Eigen::VectorXcd &y) { y += alpha * x; }

template <typename V>
auto norm2(V const &v) -> double
{
  return std::sqrt(std::max(0.0, dotc(v, v).real()));
}

template <typename Tag>
auto allFinite(Stack<Tag> const &s) -> bool
{
  for (auto const &im : s.data) {
    if (!im.allFinite()) { return false; }
  }
  return true;
}

inline auto allFinite(Eigen::VectorXcd const &v) -> bool { return v.allFinite(); }

template <typename Tag>
void checkSameShape(Stack<Tag> const &a, Stack<Tag> const &b, char const *what)
{
  if (a.size() != b.size() || a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError(std::string(what) + ": stack shape mismatch");
  }
}

/// Flatten a stack into a vector in (leading, w, h) row-major order.
template <typename Tag>
auto flatten(Stack<Tag> const &s) -> Eigen::VectorXcd
{
  Index const n = s.width() * s.height();
  Eigen::VectorXcd v(s.size() * n);
  for (Index i = 0; i < s.size(); i++) {
    v.segment(i * n, n) = Eigen::Map<Eigen::VectorXcd const>(s[i].data(), n);
  }
  return v;
}

template <typename Tag>
auto unflatten(Eigen::VectorXcd const &v, Index n, Index w, Index h) -> Stack<Tag>
{
  if (v.size() != n * w * h) { throw ShapeError("unflatten: length mismatch"); }
  Stack<Tag> s(n, w, h);
  for (Index i = 0; i < n; i++) {
    Eigen::Map<Eigen::VectorXcd>(s[i].data(), w * h) = v.segment(i * w * h, w * h);
  }
  return s;
}

} // namespace zs
