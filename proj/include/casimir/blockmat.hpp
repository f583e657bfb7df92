#pragma once

#include <complex>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

#include "casimir/errors.hpp"

/// Dense complex linear algebra used throughout the library: complex
/// log-determinants, Schur complements and the determinant identities for
/// 2x2 block matrices, Haar-random unitaries and unitary dilations of
/// contractions.
namespace casimir::blockmat {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

inline constexpr double kDefaultPivotEps = 1e-300;
/// Max-norm tolerance used for every unitarity check in the library.
inline constexpr double kUnitarityTol = 1e-10;
inline constexpr double kContractionSlack = 1e-12;
/// Eigenvalues below this are treated as zero by hermitian_psd_sqrt.
inline constexpr double kEigenClamp = 1e-14;

/// Throws InvalidArgument when M is empty or holds a NaN/Inf entry.
void require_finite(const ComplexMatrix& m, std::string_view what);

double max_abs(const ComplexMatrix& m);

/// ||U^dagger U - 1||_max
double unitarity_residual(const ComplexMatrix& u);

bool is_unitary(const ComplexMatrix& u, double tol = kUnitarityTol);

double largest_singular_value(const ComplexMatrix& m);

/// log det M with Re = log|det M| and Im = arg det M in (-pi, pi].
/// Accumulated from the pivots of a partially pivoted LU factorization so
/// that large or tiny determinants never overflow.
Complex logdet(const ComplexMatrix& m, double pivot_eps = kDefaultPivotEps);

/// det M reconstructed from logdet. Only sensible for moderate magnitudes.
Complex det(const ComplexMatrix& m, double pivot_eps = kDefaultPivotEps);

/// Inverse via pivoted LU. Raises `on_singular` if a pivot falls below eps.
ComplexMatrix inverse(const ComplexMatrix& m, ErrorKind on_singular = ErrorKind::SingularMatrix,
                      double pivot_eps = kDefaultPivotEps);

/// Solves M X = B with the same pivot policy as inverse().
ComplexMatrix solve(const ComplexMatrix& m, const ComplexMatrix& rhs,
                    ErrorKind on_singular = ErrorKind::SingularMatrix,
                    double pivot_eps = kDefaultPivotEps);

/// M = [[A, B], [C, D]] with A and D square.
struct Block2x2 {
  ComplexMatrix A;
  ComplexMatrix B;
  ComplexMatrix C;
  ComplexMatrix D;

  /// Splits a square matrix after the first `size_a` rows/columns.
  static Block2x2 split(const ComplexMatrix& m, Index size_a);

  /// Throws InvalidArgument unless the blocks are conformable.
  void validate() const;

  Index size_a() const { return A.rows(); }
  Index size_d() const { return D.rows(); }
  ComplexMatrix assemble() const;
};

enum class SchurOf { A, D };

/// M/A = D - C A^-1 B, or M/D = A - B D^-1 C.
ComplexMatrix schur_complement(const Block2x2& m, SchurOf which,
                               double pivot_eps = kDefaultPivotEps);

/// Relative residual of det(A + B D C) = det(A) det(D) det(D^-1 + C A^-1 B).
/// A is n x n, B is n x k, D is k x k and C is k x n.
double matrix_det_lemma_residual(const ComplexMatrix& a, const ComplexMatrix& b,
                                 const ComplexMatrix& d, const ComplexMatrix& c);

struct UnitaryBlockReport {
  /// |det M - det(D) / det(A^dagger)|
  double det_ratio_residual = 0.0;
  /// ||B D^-1 C - (A - (A^dagger)^-1)||_max
  double schur_identity_residual = 0.0;
};

/// Checks the two determinant/block identities that hold for a unitary M with
/// invertible diagonal blocks.
UnitaryBlockReport unitary_block_relations(const Block2x2& m);

/// Haar-distributed n x n unitary: QR of a complex Gaussian matrix with the
/// diagonal phases of R folded back into Q. Deterministic for a given seed.
ComplexMatrix random_unitary(Index n, std::uint64_t seed);

/// Complex standard-Gaussian matrix (fixture helper).
ComplexMatrix random_gaussian(Index rows, Index cols, std::uint64_t seed);

/// Strict contraction obtained as the upper-left n x n block of a Haar
/// unitary of size 2n, scaled by `scale` (<= 1).
ComplexMatrix random_contraction(Index n, std::uint64_t seed, double scale = 1.0);

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Eigenvalues below kEigenClamp (rounding noise around zero) are clamped to zero.
ComplexMatrix hermitian_psd_sqrt(const ComplexMatrix& h);

/// Halmos dilation U = [[K, (1-KK^dagger)^1/2], [(1-K^dagger K)^1/2, -K^dagger]].
/// The upper-left block is a bitwise copy of K.
ComplexMatrix unitary_dilation(const ComplexMatrix& k);

}  // namespace casimir::blockmat
