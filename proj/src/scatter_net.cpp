#include "casimir/scatter_net.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace casimir::scatter {

using blockmat::kDefaultPivotEps;
using blockmat::logdet;

namespace {

ComplexMatrix identity(Index n) { return ComplexMatrix::Identity(n, n); }

double wrap_to_pi(double phase) { return std::remainder(phase, 2.0 * std::numbers::pi); }

// |log-modulus mismatch| + chord distance between the phases.
double log_residual(Complex lhs, Complex rhs) {
  return std::abs(lhs.real() - rhs.real()) + phase_distance(lhs.imag(), rhs.imag());
}

// (1 - a b)^-1 rhs, reporting a singular resolvent as a resonance.
ComplexMatrix resolvent_solve(const ComplexMatrix& a, const ComplexMatrix& b,
                              const ComplexMatrix& rhs) {
  const Index n = a.rows();
  if (n == 0) return ComplexMatrix::Zero(0, rhs.cols());
  return blockmat::solve(identity(n) - a * b, rhs, ErrorKind::ResonantSingular, kDefaultPivotEps);
}

}  // namespace

double phase_distance(double a, double b) {
  return std::abs(std::polar(1.0, a) - std::polar(1.0, b));
}

ScatteringMatrix::ScatteringMatrix(ComplexMatrix ii, ComplexMatrix ie, ComplexMatrix ei,
                                   ComplexMatrix ee, bool unitary)
    : ii_(std::move(ii)), ie_(std::move(ie)), ei_(std::move(ei)), ee_(std::move(ee)),
      unitary_(unitary) {}

ScatteringMatrix ScatteringMatrix::from_blocks(ComplexMatrix ii, ComplexMatrix ie,
                                               ComplexMatrix ei, ComplexMatrix ee,
                                               bool check_unitary) {
  const Index ni = ii.rows();
  const Index ne = ee.rows();
  const bool conformable = ii.cols() == ni && ee.cols() == ne && ie.rows() == ni &&
                           ie.cols() == ne && ei.rows() == ne && ei.cols() == ni;
  if (!conformable) raise(ErrorKind::ChannelMismatch, "scattering blocks are not conformable");
  if (ni + ne < 1) raise(ErrorKind::InvalidArgument, "scattering matrix has no channels");
  ScatteringMatrix s(std::move(ii), std::move(ie), std::move(ei), std::move(ee), false);
  const ComplexMatrix full = s.assembled();
  if (!full.allFinite()) raise(ErrorKind::InvalidArgument, "scattering matrix: non-finite entry");
  if (check_unitary) {
    const double defect = blockmat::unitarity_residual(full);
    if (defect > blockmat::kUnitarityTol) {
      raise(ErrorKind::NotUnitary, "unitarity defect " + std::to_string(defect));
    }
    s.unitary_ = true;
  }
  return s;
}

ScatteringMatrix ScatteringMatrix::from_matrix(const ComplexMatrix& s, Index n_int,
                                               bool check_unitary) {
  if (s.rows() != s.cols() || n_int < 0 || n_int > s.rows()) {
    raise(ErrorKind::ChannelMismatch, "from_matrix: bad partition");
  }
  const auto b = blockmat::Block2x2::split(s, n_int);
  return from_blocks(b.A, b.B, b.C, b.D, check_unitary);
}

ScatteringMatrix ScatteringMatrix::transparent(Index n) {
  return from_blocks(ComplexMatrix::Zero(n, n), identity(n), identity(n),
                     ComplexMatrix::Zero(n, n), true);
}

ComplexMatrix ScatteringMatrix::assembled() const {
  return blockmat::Block2x2{ii_, ie_, ei_, ee_}.assemble();
}

ScatteringMatrix ScatteringMatrix::with_internal(Index n_int) const {
  ScatteringMatrix s = from_matrix(assembled(), n_int, false);
  s.unitary_ = unitary_;
  return s;
}

ScatteringMatrix ScatteringMatrix::reordered(std::span<const Index> order, Index n_int) const {
  const Index n = size();
  if (static_cast<Index>(order.size()) != n) {
    raise(ErrorKind::ChannelMismatch, "reordered: permutation has wrong length");
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Index k : order) {
    if (k < 0 || k >= n || seen[static_cast<std::size_t>(k)]) {
      raise(ErrorKind::ChannelMismatch, "reordered: not a permutation");
    }
    seen[static_cast<std::size_t>(k)] = true;
  }
  const ComplexMatrix full = assembled();
  ComplexMatrix permuted(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) permuted(i, j) = full(order[i], order[j]);
  }
  ScatteringMatrix s = from_matrix(permuted, n_int, false);
  s.unitary_ = unitary_;
  return s;
}

RoundTrip round_trip(const ComplexMatrix& s1_ii, const ComplexMatrix& s2_ii) {
  const Index n = s1_ii.rows();
  if (s1_ii.cols() != n || s2_ii.rows() != n || s2_ii.cols() != n) {
    raise(ErrorKind::ChannelMismatch, "round_trip: internal blocks must be square and equal");
  }
  RoundTrip rt;
  rt.d12 = resolvent_solve(s2_ii, s1_ii, identity(n));
  rt.d21 = resolvent_solve(s1_ii, s2_ii, identity(n));
  if (n > 0) {
    const ComplexMatrix product = s2_ii * s1_ii;
    rt.spectral_radius_estimate = Eigen::ComplexEigenSolver<ComplexMatrix>(product, false)
                                      .eigenvalues()
                                      .cwiseAbs()
                                      .maxCoeff();
  }
  return rt;
}

ComplexMatrix round_trip_series(const ComplexMatrix& s1_ii, const ComplexMatrix& s2_ii,
                                int terms) {
  const Index n = s1_ii.rows();
  if (s1_ii.cols() != n || s2_ii.rows() != n || s2_ii.cols() != n) {
    raise(ErrorKind::ChannelMismatch, "round_trip_series: internal blocks must match");
  }
  if (terms < 0) raise(ErrorKind::InvalidArgument, "round_trip_series: terms must be >= 0");
  const ComplexMatrix step = s2_ii * s1_ii;
  ComplexMatrix power = identity(n);
  ComplexMatrix sum = power;
  for (int k = 1; k <= terms; ++k) {
    power = power * step;
    sum += power;
  }
  return sum;
}

ScatteringMatrix star(const ScatteringMatrix& s1, const ScatteringMatrix& s2) {
  if (s1.n_int() != s2.n_int()) {
    raise(ErrorKind::ChannelMismatch, "star: internal channel counts differ (" +
                                          std::to_string(s1.n_int()) + " vs " +
                                          std::to_string(s2.n_int()) + ")");
  }
  const Index e1 = s1.n_ext();
  const Index e2 = s2.n_ext();

  const ComplexMatrix d21_s1ie = resolvent_solve(s1.ii(), s2.ii(), s1.ie());
  const ComplexMatrix d12_s2ie = resolvent_solve(s2.ii(), s1.ii(), s2.ie());

  ComplexMatrix ee(e1 + e2, e1 + e2);
  ee.topLeftCorner(e1, e1) = s1.ee() + s1.ei() * s2.ii() * d21_s1ie;
  ee.topRightCorner(e1, e2) = s1.ei() * d12_s2ie;
  ee.bottomLeftCorner(e2, e1) = s2.ei() * d21_s1ie;
  ee.bottomRightCorner(e2, e2) = s2.ee() + s2.ei() * s1.ii() * d12_s2ie;

  auto out = ScatteringMatrix::from_blocks(ComplexMatrix(0, 0), ComplexMatrix(0, e1 + e2),
                                           ComplexMatrix(e1 + e2, 0), std::move(ee), false);
  // Flag inherited, not re-checked at the construction tolerance.
  out.unitary_ = s1.flagged_unitary() && s2.flagged_unitary();
  return out;
}

double det_composition_residual(const ScatteringMatrix& s1, const ScatteringMatrix& s2) {
  const Index n = s1.n_int();
  const ScatteringMatrix composed = star(s1, s2);
  const Complex lhs = logdet(composed.assembled());

  Complex rhs = logdet(s1.assembled()) + logdet(s2.assembled());
  rhs += Complex(0.0, std::numbers::pi * static_cast<double>(n));
  if (n > 0) {
    // det D21 / conj(det D21) = exp(2i Im log det D21) and log det D21 = -log det(1 - S1ii S2ii)
    const Complex ld_inv = logdet(identity(n) - s1.ii() * s2.ii());
    rhs += Complex(0.0, -2.0 * ld_inv.imag());
  }
  return log_residual(lhs, rhs);
}

Complex alpha_phase(const ScatteringMatrix& s1, const ScatteringMatrix& s2) {
  const Index n = s1.n_int();
  if (s2.n_int() != n) raise(ErrorKind::ChannelMismatch, "alpha_phase: internal counts differ");
  if (n == 0) return Complex(1.0);
  using blockmat::solve;
  const ComplexMatrix x1 = s1.ie() * solve(s1.ee(), s1.ei(), ErrorKind::SingularBlock);
  const ComplexMatrix x2 = s2.ie() * solve(s2.ee(), s2.ei(), ErrorKind::SingularBlock);
  // Inverses of the internal blocks enter through the reduced form; fail the
  // same way when they are not available.
  (void)blockmat::inverse(s1.ii(), ErrorKind::SingularBlock);
  (void)blockmat::inverse(s2.ii(), ErrorKind::SingularBlock);
  (void)blockmat::inverse(s1.ii() - s2.ii().adjoint(), ErrorKind::SingularBlock);

  const ComplexMatrix d12_inv = identity(n) - s2.ii() * s1.ii();
  const ComplexMatrix d21_inv = identity(n) - s1.ii() * s2.ii();

  const Complex log_num = std::conj(logdet(s2.ii())) + logdet(d12_inv + x2 * s1.ii());
  const Complex log_den = logdet(s1.ii()) + std::conj(logdet(d21_inv + x1 * s2.ii()));
  return std::exp(log_num - log_den);
}

Complex alpha_phase_reduced(const ScatteringMatrix& s1, const ScatteringMatrix& s2) {
  if (s2.n_int() != s1.n_int()) {
    raise(ErrorKind::ChannelMismatch, "alpha_phase_reduced: internal counts differ");
  }
  if (s1.n_int() == 0) return Complex(1.0);
  const ComplexMatrix diff = s2.ii().adjoint() - s1.ii();
  return std::exp(logdet(diff) - logdet(ComplexMatrix(-diff)));
}

PhaseShift phase_shift(const ScatteringMatrix& s) {
  const ComplexMatrix full = s.assembled();
  const double defect = blockmat::unitarity_residual(full);
  if (defect > blockmat::kUnitarityTol) {
    raise(ErrorKind::NotUnitary, "phase_shift: unitarity defect " + std::to_string(defect));
  }
  Eigen::ComplexEigenSolver<ComplexMatrix> eig(full, false);
  PhaseShift out;
  out.eigenphases.reserve(static_cast<std::size_t>(full.rows()));
  for (Index i = 0; i < full.rows(); ++i) out.eigenphases.push_back(std::arg(eig.eigenvalues()(i)));
  std::sort(out.eigenphases.begin(), out.eigenphases.end());
  double total = 0.0;
  for (double p : out.eigenphases) total += p;
  out.value = 0.5 * total;
  return out;
}

double dos_change(const Sampler& sampler, double omega, double step) {
  if (!(step > 0.0)) raise(ErrorKind::InvalidArgument, "dos_change: step must be positive");
  const PhaseShift lo = phase_shift(sampler(omega - step));
  const PhaseShift hi = phase_shift(sampler(omega + step));
  if (lo.eigenphases.size() != hi.eigenphases.size()) {
    raise(ErrorKind::ChannelMismatch, "dos_change: sampler changed the channel count");
  }
  const std::size_t n = lo.eigenphases.size();
  std::vector<bool> used(n, false);
  double shift = 0.0;
  for (double a : lo.eigenphases) {
    std::size_t best = n;
    double best_distance = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double d = phase_distance(a, hi.eigenphases[j]);
      if (best == n || d < best_distance) {
        best = j;
        best_distance = d;
      }
    }
    used[best] = true;
    const double delta = wrap_to_pi(hi.eigenphases[best] - a);
    if (std::abs(delta) >= 0.5 * std::numbers::pi) {
      raise(ErrorKind::BranchJump, "eigenphase moved by " + std::to_string(delta) +
                                       " over the difference stencil; reduce the step");
    }
    shift += delta;
  }
  // The phase shift is half the eigenphase sum.
  return 0.5 * shift / (2.0 * step) / std::numbers::pi;
}

ScatteringMatrix translation_scatterer(const ComplexMatrix& forward, const ComplexMatrix& backward) {
  const Index n = forward.rows();
  if (forward.cols() != n || backward.rows() != n || backward.cols() != n || n == 0) {
    raise(ErrorKind::ChannelMismatch, "translation_scatterer: transmission blocks must be square");
  }
  // Lossy part on [side 2 | side 1]; side 1 -> side 2 is `forward`.
  ComplexMatrix k = ComplexMatrix::Zero(2 * n, 2 * n);
  k.topRightCorner(n, n) = forward;
  k.bottomLeftCorner(n, n) = backward;
  return ScatteringMatrix::from_matrix(blockmat::unitary_dilation(k), n, true);
}

TranslationBlocks translation_blocks(const ScatteringMatrix& s_l) {
  const Index n = s_l.n_int();
  if (s_l.n_ext() < n) {
    raise(ErrorKind::ChannelMismatch, "translation_blocks: too few external channels");
  }
  return {s_l.ei().topRows(n), s_l.ie().leftCols(n)};
}

ScatteringMatrix chain3(const ScatteringMatrix& s1, const ScatteringMatrix& s_l,
                        const ScatteringMatrix& s2) {
  const Index n = s1.n_int();
  if (s_l.n_int() != s2.n_int() || s_l.n_ext() < n) {
    raise(ErrorKind::ChannelMismatch, "chain3: channel counts are not conformable");
  }
  return star(s1, star(s_l, s2).with_internal(n));
}

double chain3_factorization_residual(const ScatteringMatrix& s1, const ScatteringMatrix& s_l,
                                     const ScatteringMatrix& s2) {
  const Index n = s1.n_int();
  if (s_l.n_int() != n || s2.n_int() != n) {
    raise(ErrorKind::ChannelMismatch, "chain3: all factors must share the internal count");
  }
  if (blockmat::max_abs(s_l.ii()) > 1e-14) {
    raise(ErrorKind::InvalidArgument, "chain3: translation scatterer must not backscatter");
  }
  const Complex log_sl = logdet(s_l.assembled());
  const Complex log_s2 = logdet(s2.assembled());
  const Complex sign_n(0.0, std::numbers::pi * static_cast<double>(n));

  // No round trips between S_L and S2.
  const Complex lhs_inner = logdet(star(s_l, s2).assembled());
  const double inner = log_residual(lhs_inner, sign_n + log_sl + log_s2);

  const auto t = translation_blocks(s_l);
  const ComplexMatrix m = s1.ii() * t.to_side1 * s2.ii() * t.to_side2;
  const Complex ld_inv = logdet(identity(n) - m);
  const Complex lhs = logdet(chain3(s1, s_l, s2).assembled());
  const Complex rhs =
      logdet(s1.assembled()) + log_s2 + log_sl + Complex(0.0, -2.0 * ld_inv.imag());
  return std::max(inner, log_residual(lhs, rhs));
}

ScatteringMatrix random_scatterer(Index n_int, Index n_ext, std::uint64_t seed, FixtureKind kind) {
  if (n_int < 0 || n_ext < 0 || n_int + n_ext < 1) {
    raise(ErrorKind::InvalidArgument, "random_scatterer: bad channel counts");
  }
  const Index total = n_int + n_ext;
  if (kind == FixtureKind::Haar || n_int == 0) {
    return ScatteringMatrix::from_matrix(blockmat::random_unitary(total, seed), n_int, true);
  }
  if (n_ext < n_int) {
    raise(ErrorKind::InvalidArgument, "random_scatterer: dilation fixtures need n_ext >= n_int");
  }
  const ComplexMatrix k = blockmat::random_contraction(n_int, seed, 0.95);
  ComplexMatrix full = ComplexMatrix::Zero(total, total);
  full.topLeftCorner(2 * n_int, 2 * n_int) = blockmat::unitary_dilation(k);
  const Index extra = n_ext - n_int;
  if (extra > 0) {
    full.bottomRightCorner(extra, extra) = blockmat::random_unitary(extra, seed ^ 0x9e3779b97f4a7c15ULL);
  }
  ComplexMatrix mix_out = identity(total);
  ComplexMatrix mix_in = identity(total);
  mix_out.bottomRightCorner(n_ext, n_ext) = blockmat::random_unitary(n_ext, seed + 1);
  mix_in.bottomRightCorner(n_ext, n_ext) = blockmat::random_unitary(n_ext, seed + 2);
  return ScatteringMatrix::from_matrix(mix_out * full * mix_in, n_int, true);
}

}  // namespace casimir::scatter
