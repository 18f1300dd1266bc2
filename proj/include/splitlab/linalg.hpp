#pragma once

#include "splitlab/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace splitlab::linalg {

/// Orthonormal basis (n x rank) of the column span of `columns`.
/// Deterministic: Householder QR, then columns flipped so R has a positive diagonal.
Mat orthonormal_basis(const Mat& columns);

/// Orthogonal projector onto the column span of `basis`.
Mat orthogonal_projector(const Mat& basis);

/// Sine of the largest principal angle between the column spans of a and b
/// (both assumed orthonormal, equal dimension).
double max_principal_sine(const Mat& a, const Mat& b);

/// Ratio of largest to smallest singular value.
double condition_number(const Mat& m);

/// All j-element subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<int>> subsets(int n, int j);

/// j-th compound (exterior power) of a square matrix, indexed by `subsets(n, j)`.
Mat compound(const Mat& m, int j);

/// Orthonormal n x m frame from a standard Gaussian draw.
Mat random_orthonormal(int n, int m, std::mt19937_64& rng);

/// Least-squares slope and intercept of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace splitlab::linalg
