#include "casimir/blockmat.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace casimir::blockmat {

namespace {

Eigen::PartialPivLU<ComplexMatrix> checked_lu(const ComplexMatrix& m, ErrorKind on_singular,
                                              double pivot_eps) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    raise(ErrorKind::InvalidArgument, "matrix must be square and non-empty");
  }
  Eigen::PartialPivLU<ComplexMatrix> lu(m);
  const auto& packed = lu.matrixLU();
  for (Index i = 0; i < packed.rows(); ++i) {
    if (!(std::abs(packed(i, i)) >= pivot_eps)) {
      raise(on_singular, "pivot " + std::to_string(i) + " has magnitude " +
                             std::to_string(std::abs(packed(i, i))));
    }
  }
  return lu;
}

double wrap_phase(double phase) {
  double wrapped = std::remainder(phase, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

}  // namespace

void require_finite(const ComplexMatrix& m, std::string_view what) {
  if (m.size() == 0) {
    raise(ErrorKind::InvalidArgument, std::string(what) + ": empty matrix");
  }
  if (!m.allFinite()) {
    raise(ErrorKind::InvalidArgument, std::string(what) + ": non-finite entry");
  }
}

double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double unitarity_residual(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  const ComplexMatrix gram = u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols());
  return max_abs(gram);
}

bool is_unitary(const ComplexMatrix& u, double tol) { return unitarity_residual(u) <= tol; }

double largest_singular_value(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

Complex logdet(const ComplexMatrix& m, double pivot_eps) {
  const auto lu = checked_lu(m, ErrorKind::SingularMatrix, pivot_eps);
  const auto& packed = lu.matrixLU();
  double log_modulus = 0.0;
  double phase = 0.0;
  for (Index i = 0; i < packed.rows(); ++i) {
    log_modulus += std::log(std::abs(packed(i, i)));
    phase += std::arg(packed(i, i));
  }
  if (lu.permutationP().determinant() < 0) phase += std::numbers::pi;
  return {log_modulus, wrap_phase(phase)};
}

Complex det(const ComplexMatrix& m, double pivot_eps) { return std::exp(logdet(m, pivot_eps)); }

ComplexMatrix inverse(const ComplexMatrix& m, ErrorKind on_singular, double pivot_eps) {
  return checked_lu(m, on_singular, pivot_eps).inverse();
}

ComplexMatrix solve(const ComplexMatrix& m, const ComplexMatrix& rhs, ErrorKind on_singular,
                    double pivot_eps) {
  if (rhs.rows() != m.rows()) raise(ErrorKind::InvalidArgument, "solve: row mismatch");
  return checked_lu(m, on_singular, pivot_eps).solve(rhs);
}

Block2x2 Block2x2::split(const ComplexMatrix& m, Index size_a) {
  if (m.rows() != m.cols() || size_a < 0 || size_a > m.rows()) {
    raise(ErrorKind::InvalidArgument, "Block2x2::split: bad partition");
  }
  const Index size_d = m.rows() - size_a;
  return Block2x2{m.topLeftCorner(size_a, size_a), m.topRightCorner(size_a, size_d),
                  m.bottomLeftCorner(size_d, size_a), m.bottomRightCorner(size_d, size_d)};
}

void Block2x2::validate() const {
  const Index na = A.rows();
  const Index nd = D.rows();
  const bool ok = A.cols() == na && D.cols() == nd && B.rows() == na && B.cols() == nd &&
                  C.rows() == nd && C.cols() == na && na + nd >= 1;
  if (!ok) raise(ErrorKind::InvalidArgument, "Block2x2: blocks are not conformable");
}

ComplexMatrix Block2x2::assemble() const {
  validate();
  const Index na = size_a();
  const Index nd = size_d();
  ComplexMatrix m(na + nd, na + nd);
  m.topLeftCorner(na, na) = A;
  m.topRightCorner(na, nd) = B;
  m.bottomLeftCorner(nd, na) = C;
  m.bottomRightCorner(nd, nd) = D;
  return m;
}

ComplexMatrix schur_complement(const Block2x2& m, SchurOf which, double pivot_eps) {
  m.validate();
  if (which == SchurOf::A) {
    return m.D - m.C * solve(m.A, m.B, ErrorKind::SingularBlock, pivot_eps);
  }
  return m.A - m.B * solve(m.D, m.C, ErrorKind::SingularBlock, pivot_eps);
}

double matrix_det_lemma_residual(const ComplexMatrix& a, const ComplexMatrix& b,
                                 const ComplexMatrix& d, const ComplexMatrix& c) {
  const Index n = a.rows();
  const Index k = d.rows();
  if (a.cols() != n || d.cols() != k || b.rows() != n || b.cols() != k || c.rows() != k ||
      c.cols() != n) {
    raise(ErrorKind::InvalidArgument, "matrix_det_lemma_residual: blocks are not conformable");
  }
  const ComplexMatrix d_inv = inverse(d, ErrorKind::SingularBlock);
  const ComplexMatrix a_inv_b = solve(a, b, ErrorKind::SingularBlock);

  const Complex lhs = logdet(a + b * d * c);
  const Complex rhs = logdet(a) + logdet(d) + logdet(d_inv + c * a_inv_b);
  // |det L - det R| / |det L| = |1 - exp(log R - log L)|
  return std::abs(1.0 - std::exp(rhs - lhs));
}

UnitaryBlockReport unitary_block_relations(const Block2x2& m) {
  m.validate();
  const ComplexMatrix full = m.assemble();
  const double defect = unitarity_residual(full);
  if (defect > kUnitarityTol) {
    raise(ErrorKind::NotUnitary, "unitarity defect " + std::to_string(defect));
  }
  const ComplexMatrix d_inv = inverse(m.D, ErrorKind::SingularBlock);
  const ComplexMatrix a_adj_inv = inverse(m.A.adjoint(), ErrorKind::SingularBlock);

  UnitaryBlockReport report;
  const Complex det_m = std::exp(logdet(full));
  const Complex det_ratio = std::exp(logdet(m.D) - std::conj(logdet(m.A)));
  report.det_ratio_residual = std::abs(det_m - det_ratio);
  report.schur_identity_residual = max_abs(m.B * d_inv * m.C - (m.A - a_adj_inv));
  return report;
}

ComplexMatrix random_gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
  ComplexMatrix g(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = Complex(re, im);
    }
  }
  return g;
}

ComplexMatrix random_unitary(Index n, std::uint64_t seed) {
  if (n < 1) raise(ErrorKind::InvalidArgument, "random_unitary: n must be >= 1");
  const ComplexMatrix g = random_gaussian(n, n, seed);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
  const ComplexMatrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    const Complex diag = r(j, j);
    const double mod = std::abs(diag);
    q.col(j) *= mod > 0.0 ? diag / mod : Complex(1.0);
  }
  return q;
}

ComplexMatrix random_contraction(Index n, std::uint64_t seed, double scale) {
  if (!(scale >= 0.0 && scale <= 1.0)) {
    raise(ErrorKind::InvalidArgument, "random_contraction: scale must lie in [0, 1]");
  }
  return scale * random_unitary(2 * n, seed).topLeftCorner(n, n);
}

ComplexMatrix hermitian_psd_sqrt(const ComplexMatrix& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(h);
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (Index i = 0; i < lambda.size(); ++i) lambda(i) = lambda(i) > kEigenClamp ? std::sqrt(lambda(i)) : 0.0;
  const ComplexMatrix& v = eig.eigenvectors();
  return v * lambda.cast<Complex>().asDiagonal() * v.adjoint();
}

ComplexMatrix unitary_dilation(const ComplexMatrix& k) {
  require_finite(k, "unitary_dilation");
  if (k.rows() != k.cols()) raise(ErrorKind::InvalidArgument, "unitary_dilation: K must be square");
  const double sigma = largest_singular_value(k);
  if (sigma > 1.0 + kContractionSlack) {
    raise(ErrorKind::NotContraction, "largest singular value " + std::to_string(sigma));
  }
  const Index n = k.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  ComplexMatrix u(2 * n, 2 * n);
  u.topLeftCorner(n, n) = k;
  u.topRightCorner(n, n) = hermitian_psd_sqrt(id - k * k.adjoint());
  u.bottomLeftCorner(n, n) = hermitian_psd_sqrt(id - k.adjoint() * k);
  u.bottomRightCorner(n, n) = -k.adjoint();
  return u;
}

}  // namespace casimir::blockmat
