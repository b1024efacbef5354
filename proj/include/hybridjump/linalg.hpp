#pragma once

// Small fixed-capacity vectors and matrices. States live in R^d with d <= 8,
// so everything stays on the stack in the simulation hot loops.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>

#include "hybridjump/error.hpp"

namespace hybridjump {

inline constexpr std::size_t kMaxDim = 8;

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : n_(n) {
    if (n > kMaxDim) throw Error(ErrorCode::InvalidArgument, "dimension exceeds kMaxDim");
    a_.fill(0.0);
    std::fill_n(a_.begin(), n, fill);
  }
  Vec(std::initializer_list<double> xs) : Vec(xs.size()) {
    std::copy(xs.begin(), xs.end(), a_.begin());
  }

  std::size_t size() const { return n_; }
  double& operator[](std::size_t i) { return a_[i]; }
  double operator[](std::size_t i) const { return a_[i]; }
  double* begin() { return a_.data(); }
  double* end() { return a_.data() + n_; }
  const double* begin() const { return a_.data(); }
  const double* end() const { return a_.data() + n_; }

  Vec& operator+=(const Vec& o) {
    for (std::size_t i = 0; i < n_; ++i) a_[i] += o.a_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (std::size_t i = 0; i < n_; ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (std::size_t i = 0; i < n_; ++i) a_[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend bool operator==(const Vec& a, const Vec& b) {
    return a.n_ == b.n_ && std::equal(a.begin(), a.end(), b.begin());
  }

  double dot(const Vec& o) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += a_[i] * o.a_[i];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const {
    return std::all_of(begin(), end(), [](double v) { return std::isfinite(v); });
  }

 private:
  std::array<double, kMaxDim> a_{};
  std::size_t n_ = 0;
};

class Mat {
 public:
  Mat() = default;
  explicit Mat(std::size_t n, double fill = 0.0) : n_(n) {
    if (n > kMaxDim) throw Error(ErrorCode::InvalidArgument, "dimension exceeds kMaxDim");
    a_.fill(0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a_[i * kMaxDim + j] = fill;
  }
  static Mat identity(std::size_t n) {
    Mat m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat outer(const Vec& u, const Vec& v) {
    Mat m(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
    return m;
  }

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * kMaxDim + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * kMaxDim + j]; }

  Mat& operator+=(const Mat& o) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) += o(i, j);
    return *this;
  }
  Mat& operator-=(const Mat& o) { return *this += o * -1.0; }
  Mat& operator*=(double s) {
    for (auto& v : a_) v *= s;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(Mat a, double s) { return a *= s; }
  friend Mat operator*(double s, Mat a) { return a *= s; }

  Vec operator*(const Vec& v) const {
    Vec r(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * v[j];
      r[i] = s;
    }
    return r;
  }
  Mat operator*(const Mat& o) const {
    Mat r(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = 0; k < n_; ++k)
        for (std::size_t j = 0; j < n_; ++j) r(i, j) += (*this)(i, k) * o(k, j);
    return r;
  }
  double trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
  }
  double frobenius() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j) * (*this)(i, j);
    return std::sqrt(s);
  }
  bool finite() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        if (!std::isfinite((*this)(i, j))) return false;
    return true;
  }

 private:
  std::array<double, kMaxDim * kMaxDim> a_{};
  std::size_t n_ = 0;
};

inline constexpr double kPsdTolerance = 1e-12;

// Square root of a symmetric PSD matrix. d = 1, 2 use the symmetric root in
// closed form; larger d fall back to a Cholesky factor (L L^T = a), which is
// equal in law when used to scale Gaussian increments.
inline Mat psd_sqrt(const Mat& a) {
  const std::size_t n = a.size();
  if (!a.finite()) throw Error(ErrorCode::NonFiniteCoefficient, "covariance has non-finite entries");
  if (n == 1) {
    if (a(0, 0) < -kPsdTolerance) throw Error(ErrorCode::NonPSDCovariance, "negative variance");
    Mat r(1);
    r(0, 0) = std::sqrt(std::max(a(0, 0), 0.0));
    return r;
  }
  if (n == 2) {
    const double p = a(0, 0), q = 0.5 * (a(0, 1) + a(1, 0)), s = a(1, 1);
    const double tr = p + s;
    const double disc = std::sqrt(0.25 * (p - s) * (p - s) + q * q);
    const double lmin = 0.5 * tr - disc;
    if (lmin < -kPsdTolerance) throw Error(ErrorCode::NonPSDCovariance, "2x2 covariance has a negative eigenvalue");
    const double det = std::max(p * s - q * q, 0.0);
    const double sd = std::sqrt(det);
    const double t = std::sqrt(std::max(tr + 2.0 * sd, 0.0));
    Mat r(2);
    if (t == 0.0) return r;
    r(0, 0) = (p + sd) / t;
    r(1, 1) = (s + sd) / t;
    r(0, 1) = r(1, 0) = q / t;
    return r;
  }
  Mat l(n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) + kPsdTolerance;
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -kPsdTolerance) throw Error(ErrorCode::NonPSDCovariance, "Cholesky pivot negative");
    d = std::sqrt(std::max(d, 0.0));
    l(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.5 * (a(i, j) + a(j, i));
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = d > 0.0 ? s / d : 0.0;
    }
  }
  return l;
}

}  // namespace hybridjump
