#pragma once

#include <array>
#include <cmath>

#include "qcm/errors.hpp"

// Pearson chi-squared for 2x2 tables, without continuity correction, and
// the chi-squared(1) upper tail computed from the complementary error
// function: Q(x) = erfc(sqrt(x/2)). erfc uses W. J. Cody's rational
// Chebyshev approximations (CALERF, 1969); absolute error is far below
// the 1e-9 budget this module documents.

namespace qcm::stats {

namespace detail {

inline double erf_small(double x) {
  // |x| <= 0.46875
  static constexpr double a[5] = {3.16112374387056560e00, 1.13864154151050156e02,
                                  3.77485237685302021e02, 3.20937758913846947e03,
                                  1.85777706184603153e-1};
  static constexpr double b[4] = {2.36012909523441209e01, 2.44024637934444173e02,
                                  1.28261652607737228e03, 2.84423683343917062e03};
  const double z = x * x;
  double num = a[4] * z;
  double den = z;
  for (int i = 0; i < 3; ++i) {
    num = (num + a[i]) * z;
    den = (den + b[i]) * z;
  }
  return x * (num + a[3]) / (den + b[3]);
}

inline double erfc_mid(double x) {
  // 0.46875 < x <= 4
  static constexpr double c[9] = {5.64188496988670089e-1, 8.88314979438837594e00,
                                  6.61191906371416295e01, 2.98635138197400131e02,
                                  8.81952221241769090e02, 1.71204761263407058e03,
                                  2.05107837782607147e03, 1.23033935479799725e03,
                                  2.15311535474403846e-8};
  static constexpr double d[8] = {1.57449261107098347e01, 1.17693950891312499e02,
                                  5.37181101862009858e02, 1.62138957456669019e03,
                                  3.29079923573345963e03, 4.36261909014324716e03,
                                  3.43936767414372164e03, 1.23033935480374942e03};
  double num = c[8] * x;
  double den = x;
  for (int i = 0; i < 7; ++i) {
    num = (num + c[i]) * x;
    den = (den + d[i]) * x;
  }
  const double ratio = (num + c[7]) / (den + d[7]);
  // exp(-x^2) split for accuracy, as in CALERF.
  const double xsq = std::floor(x * 16.0) / 16.0;
  const double del = (x - xsq) * (x + xsq);
  return std::exp(-xsq * xsq) * std::exp(-del) * ratio;
}

inline double erfc_large(double x) {
  // x > 4
  static constexpr double p[6] = {3.05326634961232344e-1, 3.60344899949804439e-1,
                                  1.25781726111229246e-1, 1.60837851487422766e-2,
                                  6.58749161529837803e-4, 1.63153871373020978e-2};
  static constexpr double q[5] = {2.56852019228982242e00, 1.87295284992346047e00,
                                  5.27905102951428412e-1, 6.05183413124413191e-2,
                                  2.33520497626869185e-3};
  static constexpr double inv_sqrt_pi = 5.6418958354775628695e-1;
  const double z = 1.0 / (x * x);
  double num = p[5] * z;
  double den = z;
  for (int i = 0; i < 4; ++i) {
    num = (num + p[i]) * z;
    den = (den + q[i]) * z;
  }
  double ratio = z * (num + p[4]) / (den + q[4]);
  ratio = (inv_sqrt_pi - ratio) / x;
  const double xsq = std::floor(x * 16.0) / 16.0;
  const double del = (x - xsq) * (x + xsq);
  return std::exp(-xsq * xsq) * std::exp(-del) * ratio;
}

}  // namespace detail

inline double erfc_approx(double x) {
  const double ax = std::fabs(x);
  double result;
  if (ax <= 0.46875)
    result = 1.0 - detail::erf_small(x);
  else if (ax <= 4.0)
    result = detail::erfc_mid(ax);
  else
    result = detail::erfc_large(ax);
  if (x < -0.46875) result = 2.0 - result;
  return result;
}

// Upper tail of the chi-squared distribution with one degree of freedom.
inline double chi1_survival(double statistic) {
  if (statistic < 0) throw ValidationError("chi-squared statistic must be non-negative");
  return erfc_approx(std::sqrt(statistic / 2.0));
}

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 1;
  double p_value = 1.0;
};

using Table2x2 = std::array<std::array<double, 2>, 2>;

// Pearson statistic sum((o-e)^2/e) over the four cells, expected counts
// e_ij = row_i * col_j / N. No Yates continuity correction.
inline ChiSquareResult chi_squared_2x2(const Table2x2& observed) {
  for (const auto& row : observed)
    for (double cell : row)
      if (cell < 0 || !std::isfinite(cell))
        throw ValidationError("table cells must be finite and non-negative");
  const double r0 = observed[0][0] + observed[0][1];
  const double r1 = observed[1][0] + observed[1][1];
  const double c0 = observed[0][0] + observed[1][0];
  const double c1 = observed[0][1] + observed[1][1];
  if (r0 <= 0 || r1 <= 0 || c0 <= 0 || c1 <= 0)
    throw ValidationError("zero marginal in 2x2 table");
  const double total = r0 + r1;
  const double rows[2] = {r0, r1};
  const double cols[2] = {c0, c1};
  double statistic = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double expected = rows[i] * cols[j] / total;
      const double diff = observed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                          expected;
      statistic += diff * diff / expected;
    }
  }
  return {statistic, 1, chi1_survival(statistic)};
}

}  // namespace qcm::stats
