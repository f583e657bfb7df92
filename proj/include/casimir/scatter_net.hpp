#pragma once

#include <functional>
#include <span>
#include <vector>

#include "casimir/blockmat.hpp"

/// Channel-partitioned scattering matrices and their composition.
///
/// Channel ordering convention used everywhere in this namespace: internal
/// channels (those linking to the partner scatterer) come first, followed by
/// the external channels of the object, followed by environment ports of a
/// lossy medium where present.
namespace casimir::scatter {

using blockmat::Complex;
using blockmat::ComplexMatrix;
using blockmat::Index;

class ScatteringMatrix {
 public:
  /// Builds from the four blocks. When `check_unitary` is set the assembled
  /// matrix must be unitary within blockmat::kUnitarityTol, and the result is
  /// flagged unitary.
  static ScatteringMatrix from_blocks(ComplexMatrix ii, ComplexMatrix ie, ComplexMatrix ei,
                                      ComplexMatrix ee, bool check_unitary = true);

  /// Splits an assembled square matrix after its first `n_int` channels.
  static ScatteringMatrix from_matrix(const ComplexMatrix& s, Index n_int,
                                      bool check_unitary = true);

  /// n internal and n external channels with full transmission and no
  /// reflection.
  static ScatteringMatrix transparent(Index n);

  Index n_int() const { return ii_.rows(); }
  Index n_ext() const { return ee_.rows(); }
  Index size() const { return n_int() + n_ext(); }
  bool flagged_unitary() const { return unitary_; }

  const ComplexMatrix& ii() const { return ii_; }
  const ComplexMatrix& ie() const { return ie_; }
  const ComplexMatrix& ei() const { return ei_; }
  const ComplexMatrix& ee() const { return ee_; }

  ComplexMatrix assembled() const;

  /// Same operator, with the first `n_int` channels of the assembled matrix
  /// declared internal.
  ScatteringMatrix with_internal(Index n_int) const;

  /// Permutes channels (new channel k is old channel order[k]) and
  /// repartitions.
  ScatteringMatrix reordered(std::span<const Index> order, Index n_int) const;

 private:
  ScatteringMatrix(ComplexMatrix ii, ComplexMatrix ie, ComplexMatrix ei, ComplexMatrix ee,
                   bool unitary);

  friend ScatteringMatrix star(const ScatteringMatrix& s1, const ScatteringMatrix& s2);

  ComplexMatrix ii_;
  ComplexMatrix ie_;
  ComplexMatrix ei_;
  ComplexMatrix ee_;
  bool unitary_ = false;
};

/// D12 = (1 - S2ii S1ii)^-1 and D21 = (1 - S1ii S2ii)^-1.
struct RoundTrip {
  ComplexMatrix d12;
  ComplexMatrix d21;
  double spectral_radius_estimate = 0.0;
};

RoundTrip round_trip(const ComplexMatrix& s1_ii, const ComplexMatrix& s2_ii);

/// Partial sum sum_{k=0}^{terms} (S2ii S1ii)^k.
ComplexMatrix round_trip_series(const ComplexMatrix& s1_ii, const ComplexMatrix& s2_ii,
                                int terms);

/// Chains two scatterers over their shared internal channels. The result has
/// no internal channels; its external channels are S1's followed by S2's.
ScatteringMatrix star(const ScatteringMatrix& s1, const ScatteringMatrix& s2);

/// Residual of det(S1*S2) = (-1)^n det S1 det S2 det D21 / conj(det D21),
/// as |log-modulus mismatch| + chord distance of the phases on the unit
/// circle.
double det_composition_residual(const ScatteringMatrix& s1, const ScatteringMatrix& s2);

/// The phase factor
///   conj(det S2ii) det(D12^-1 + S2ie S2ee^-1 S2ei S1ii)
///   / (det S1ii conj(det(D21^-1 + S1ie S1ee^-1 S1ei S2ii)))
/// evaluated from the full blocks. Equals (-1)^n for unitary inputs.
Complex alpha_phase(const ScatteringMatrix& s1, const ScatteringMatrix& s2);

/// det((S2ii)^dagger - S1ii) / det(S1ii - (S2ii)^dagger).
Complex alpha_phase_reduced(const ScatteringMatrix& s1, const ScatteringMatrix& s2);

struct PhaseShift {
  /// (1/2i) log det S as half the sum of principal eigenphases.
  double value = 0.0;
  /// Principal eigenphases in (-pi, pi], sorted ascending.
  std::vector<double> eigenphases;
};

PhaseShift phase_shift(const ScatteringMatrix& s);

using Sampler = std::function<ScatteringMatrix(double)>;

/// Density-of-states change (1/pi) d(phase shift)/d omega by a central
/// difference with eigenphases matched to their nearest neighbours across the
/// two samples. The sampler is invoked sequentially.
double dos_change(const Sampler& sampler, double omega, double step);

/// Lossy translation through a medium. `forward` carries side-1 amplitudes to
/// side 2, `backward` the reverse. Channel order of the result:
/// [side 2 (internal) | side 1 | 2n environment ports]. There is no
/// backscattering, so the internal block vanishes.
ScatteringMatrix translation_scatterer(const ComplexMatrix& forward, const ComplexMatrix& backward);

inline ScatteringMatrix translation_scatterer(const ComplexMatrix& t) {
  return translation_scatterer(t, t);
}

/// Translation amplitudes recovered from a translation scatterer:
/// to_side1 = 2 -> 1, to_side2 = 1 -> 2.
struct TranslationBlocks {
  ComplexMatrix to_side1;
  ComplexMatrix to_side2;
};

TranslationBlocks translation_blocks(const ScatteringMatrix& s_l);

/// S1 * S_L * S2 evaluated as S1 * (S_L * S2).
ScatteringMatrix chain3(const ScatteringMatrix& s1, const ScatteringMatrix& s_l,
                        const ScatteringMatrix& s2);

/// Max residual of the three-factor determinant factorization and of the
/// intermediate det(S_L * S2) = (-1)^n det S_L det S2.
double chain3_factorization_residual(const ScatteringMatrix& s1, const ScatteringMatrix& s_l,
                                     const ScatteringMatrix& s2);

enum class FixtureKind { Haar, Dilation };

/// Random unitary scatterer for identity checks. Haar draws the whole matrix.
/// Dilation takes a strict contraction as the internal block, completes it
/// with its Halmos dilation and mixes the external channels with Haar
/// unitaries; it needs n_ext >= n_int.
ScatteringMatrix random_scatterer(Index n_int, Index n_ext, std::uint64_t seed,
                                  FixtureKind kind = FixtureKind::Haar);

/// Distance between two phases on the unit circle, |e^{ia} - e^{ib}|.
double phase_distance(double a, double b);

}  // namespace casimir::scatter
