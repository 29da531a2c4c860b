#include "s4tok/eigen_sym3.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "s4tok/error.hpp"

namespace s4tok {

namespace {

constexpr int kMaxSweeps = 20;
constexpr double kOffDiagonalTolerance = 1e-12;

double
off_diagonal_norm(const Mat3& a)
{
  return std::sqrt(2.0 * (a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2)));
}

} // namespace

SymEigen3
eigen_sym3(const Mat3& matrix)
{
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (!(std::abs(matrix(i, j) - matrix(j, i)) <= 1e-9))
        throw InvalidArgument("eigen_sym3: matrix is not symmetric");

  Mat3 a = 0.5 * (matrix + matrix.transpose());
  Mat3 v = Mat3::Identity();
  const double scale = a.norm();

  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= kOffDiagonalTolerance * scale)
      break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0)
          continue;
        // Rotation angle that annihilates a(p, q); the smaller root of
        // t² + 2θt − 1 = 0 keeps the update stable.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int k = 0; k < 3; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        for (int k = 0; k < 3; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, 3> order{ 0, 1, 2 };
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return a(x, x) > a(y, y); });

  SymEigen3 out;
  out.sweeps = sweep;
  for (int c = 0; c < 3; ++c) {
    out.values[c] = a(order[c], order[c]);
    out.vectors.col(c) = v.col(order[c]);
  }
  return out;
}

} // namespace s4tok
