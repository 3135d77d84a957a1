// SCM families with known identification structure, shared by the unit and
// acceptance tests.
#pragma once

#include <cstdint>
#include <vector>

#include "mcause/random.hpp"
#include "mcause/scm.hpp"

namespace fixture {

using mcause::ScmSpec;

// Sets P(A_k | Z) so that A_k determines Z: level a is only emitted by
// class a % z_card, i.e. the supports are disjoint across classes. Requires
// cause card >= z_card. Masses inside a support come from `rng`.
inline void make_cause_reveal_z(ScmSpec& scm, std::size_t k, mcause::Rng& rng) {
  auto& t = scm.p_a_given_z[k];
  const int nz = scm.z.card, na = scm.causes[k].card;
  t.values.assign(static_cast<std::size_t>(nz * na), 0.0);
  for (int z = 0; z < nz; ++z) {
    double s = 0.0;
    for (int a = z; a < na; a += nz) s += t.values[z * na + a] = 0.2 + rng.uniform();
    for (int a = z; a < na; a += nz) t.values[z * na + a] /= s;
  }
}

// Z is a deterministic function of the last cause (the single auxiliary
// cause); every other cause has strictly positive P(a | z), so the focal
// overlap condition holds.
inline ScmSpec focal_identified_scm(std::uint64_t seed, int z_card, int n_causes, int y_card) {
  int cause_card = z_card;
  auto scm = mcause::random_scm({.z_card = z_card, .n_causes = n_causes,
                                 .cause_card = cause_card, .y_card = y_card},
                                seed);
  mcause::Rng rng(seed, 100, 0);
  make_cause_reveal_z(scm, scm.causes.size() - 1, rng);
  return scm;
}

// Z is a deterministic function of the first cause, so zhat(a) = a[0] % |Z|
// recovers it from the full cause vector.
inline ScmSpec zhat_identified_scm(std::uint64_t seed, int z_card, int n_causes, int y_card) {
  auto scm = mcause::random_scm({.z_card = z_card, .n_causes = n_causes,
                                 .cause_card = z_card, .y_card = y_card},
                                seed);
  mcause::Rng rng(seed, 101, 0);
  make_cause_reveal_z(scm, 0, rng);
  return scm;
}

}  // namespace fixture
