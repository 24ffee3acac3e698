#pragma once

#include <optional>
#include <vector>

#include "pbtdyn/core.hpp"

namespace pbtdyn {

/// How jump targets (and, for worst_replacement, victims) are chosen.
struct SelectionRule {
  enum class Kind { softmax, truncation, worst_replacement };

  Kind kind = Kind::softmax;
  /// Selection pressure for softmax and worst_replacement.
  double alpha = 1.0;
  /// Fraction copied / replaced under truncation, in (0, 0.5].
  double fraction = 0.2;

  static SelectionRule softmax(double alpha) {
    return {Kind::softmax, alpha, 0.2};
  }
  static SelectionRule truncation(double fraction) {
    return {Kind::truncation, 1.0, fraction};
  }
  static SelectionRule worst_replacement(double alpha) {
    return {Kind::worst_replacement, alpha, 0.2};
  }

  void validate() const;
};

const char* to_string(SelectionRule::Kind kind);
SelectionRule::Kind selection_kind_from_string(const std::string& name);

struct MutationConfig {
  double sigma = 0.1;
  std::optional<SearchBox> box;
  /// Mutate in box-normalised (-1, 1) coordinates; requires a box.
  bool scale_to_unit = false;

  void validate() const;
};

/// Copy probabilities for a fitness vector (already sign-adjusted so that
/// larger is better). Softmax and worst_replacement use exp(alpha F) with
/// max-subtraction; truncation is uniform over the ceil(fraction N) best,
/// ties broken by lower index.
Vec selection_weights(std::span<const double> fitness, const SelectionRule& rule);

/// Number of agents copied/replaced by truncation selection for N agents.
std::size_t truncation_count(std::size_t n, double fraction);

/// Hyperparameter mutation h + sigma xi, optionally in unit coordinates and
/// followed by projection onto the box.
Vec mutate(ConstSpan h, const MutationConfig& mut, Stream& rng);

/// Jump plan: source[i] is the index copied into slot i, or -1 when slot i
/// keeps its agent. Uses only the pre-jump fitness snapshot.
std::vector<int> plan_jumps(std::span<const double> fitness,
                            std::span<const int> ids, const SelectionRule& rule,
                            double tau, Stream& rng);

struct GeneticUpdate {
  Population population;
  std::vector<int> source;
};

/// Selection-mutation update of the whole population. Slot ids are kept;
/// replaced slots receive (theta_j, mutate(h_j)) from the pre-jump snapshot.
GeneticUpdate genetic_update(const Population& pop,
                             std::span<const double> fitness,
                             const SelectionRule& rule,
                             const MutationConfig& mut, double tau,
                             Stream& rng);

}  // namespace pbtdyn
