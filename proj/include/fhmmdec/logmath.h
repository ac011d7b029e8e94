// include/fhmmdec/logmath.h

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef FHMMDEC_LOGMATH_H_
#define FHMMDEC_LOGMATH_H_

#include <cmath>
#include <limits>
#include <span>

namespace fhmmdec {

// All probabilities in this codebase live in the natural-log domain.
// kLogZero stands for probability zero.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline bool IsLogZero(double x) { return std::isinf(x) && x < 0.0; }

// log(exp(a) + exp(b)) without leaving the log domain.
inline double LogAdd(double a, double b) {
  if (IsLogZero(a)) return b;
  if (IsLogZero(b)) return a;
  double m = a > b ? a : b;
  return m + std::log1p(std::exp(-(a > b ? a - b : b - a)));
}

// log sum_i exp(x_i). Returns kLogZero for an empty or all-zero span.
inline double LogSumExp(std::span<const double> xs) {
  double m = kLogZero;
  for (double x : xs)
    if (x > m) m = x;
  if (IsLogZero(m)) return kLogZero;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

inline double MaxOf(std::span<const double> xs) {
  double m = kLogZero;
  for (double x : xs)
    if (x > m) m = x;
  return m;
}

}  // namespace fhmmdec

#endif  // FHMMDEC_LOGMATH_H_
