#pragma once

#include <cmath>

#include <Eigen/Core>

namespace pivot {

// Forward-mode scalar carrying value, gradient and Hessian over a small set
// of local variables (one constraint row touches at most kMaxLocal of them).
// All residuals are polynomial/trigonometric, so +, -, *, sin, cos suffice.
inline constexpr int kMaxLocal = 12;

struct Dual2 {
  using GradVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLocal, 1>;
  using HessMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLocal,
                    kMaxLocal>;

  double v = 0.0;
  GradVec g;
  HessMat H;

  Dual2() = default;
  explicit Dual2(double value, int n) : v(value) {
    g = GradVec::Zero(n);
    H = HessMat::Zero(n, n);
  }
  static Dual2 var(double value, int index, int n) {
    Dual2 d(value, n);
    d.g(index) = 1.0;
    return d;
  }
  static Dual2 constant(double value, int n) { return Dual2(value, n); }
};

inline Dual2 operator+(const Dual2& a, const Dual2& b) {
  Dual2 r = a;
  r.v += b.v;
  r.g += b.g;
  r.H += b.H;
  return r;
}
inline Dual2 operator-(const Dual2& a, const Dual2& b) {
  Dual2 r = a;
  r.v -= b.v;
  r.g -= b.g;
  r.H -= b.H;
  return r;
}
inline Dual2 operator-(const Dual2& a) {
  Dual2 r = a;
  r.v = -r.v;
  r.g = -r.g;
  r.H = -r.H;
  return r;
}
inline Dual2 operator*(const Dual2& a, const Dual2& b) {
  Dual2 r = a;
  r.v = a.v * b.v;
  r.g = a.g * b.v + b.g * a.v;
  r.H = a.H * b.v + b.H * a.v + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}
inline Dual2 operator+(const Dual2& a, double c) {
  Dual2 r = a;
  r.v += c;
  return r;
}
inline Dual2 operator+(double c, const Dual2& a) { return a + c; }
inline Dual2 operator-(const Dual2& a, double c) { return a + (-c); }
inline Dual2 operator-(double c, const Dual2& a) { return (-a) + c; }
inline Dual2 operator*(const Dual2& a, double c) {
  Dual2 r = a;
  r.v *= c;
  r.g *= c;
  r.H *= c;
  return r;
}
inline Dual2 operator*(double c, const Dual2& a) { return a * c; }
inline Dual2 operator/(const Dual2& a, double c) { return a * (1.0 / c); }

inline Dual2 sin(const Dual2& a) {
  Dual2 r = a;
  const double s = std::sin(a.v), c = std::cos(a.v);
  r.v = s;
  r.g = c * a.g;
  r.H = c * a.H - s * (a.g * a.g.transpose());
  return r;
}
inline Dual2 cos(const Dual2& a) {
  Dual2 r = a;
  const double s = std::sin(a.v), c = std::cos(a.v);
  r.v = c;
  r.g = -s * a.g;
  r.H = -s * a.H - c * (a.g * a.g.transpose());
  return r;
}
inline Dual2 square(const Dual2& a) { return a * a; }

}  // namespace pivot
