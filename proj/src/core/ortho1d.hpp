#pragma once

#include "core/bspline.hpp"
#include "core/gram.hpp"
#include "core/partition.hpp"

#include <cstddef>
#include <vector>

namespace osp {

/// Selection rule for the characteristic interval J_n.
enum class JRule {
  /// Largest atom of the smallest order-k support that contains the new breakpoint.
  SmallestSupport,
  /// Longest atom within index distance k of L_n.
  LongestInWindow,
};

struct OrthoFunction {
  std::size_t step = 0;
  Spline spline;
  /// J_n as an atom index of F_n.
  std::size_t j_atom = 0;
  /// L_n; R_n is l_atom + 1.
  std::size_t l_atom = 0;
  /// Basis index whose coefficient is made positive.
  std::size_t sign_index = 0;
};

/// f_n in S_k(F_n), orthogonal to S_k(F_{n-1}), unit L^2 norm.
OrthoFunction next_ortho_function(const Filtration1D &filtration, std::size_t n, int k,
                                  JRule rule = JRule::SmallestSupport);

/// f_1, ..., f_N.
std::vector<OrthoFunction> ortho_system_1d(const Filtration1D &filtration, int k,
                                           JRule rule = JRule::SmallestSupport);

/// J_n for the split between atoms l_atom and l_atom + 1 of `p`.
std::size_t characteristic_interval(const Partition1D &p, std::size_t l_atom, int k, JRule rule);

/// Atoms within distance k of L_n, the admissible candidates for J_n.
std::vector<std::size_t> characteristic_candidates(const Partition1D &p, std::size_t l_atom, int k);

/// |f_n| sup per atom times |conv(J, A)| / |J|^{1/2}, against |d(A, J)|.
std::vector<DecayPoint> franklin_decay_points(const OrthoFunction &f, std::size_t j_atom);
DecayFit fit_franklin_decay(const OrthoFunction &f);

/// Envelope constant of the pointwise estimate when `atom` plays the role of J_n; smaller is better.
double candidate_score(const OrthoFunction &f, std::size_t atom);

} // namespace osp
