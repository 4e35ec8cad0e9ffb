#pragma once

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "roomlm/errors.hpp"
#include "roomlm/lm_scoring.hpp"
#include "roomlm/querygen.hpp"
#include "roomlm/scene_model.hpp"

namespace roomlm {

/// Tolerance for "sums to one" checks on probability vectors.
inline constexpr double kNormalizationTolerance = 1e-9;

/// Shannon entropy in nats of a probability vector, with 0 log 0 = 0.
///
/// Terms are summed in ascending order, so the result does not depend on the order of
/// the entries; equal distributions listed in different room orders tie exactly.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  if (p.size() == 0) throw ParameterError("entropy of an empty distribution");
  if ((p.array() < Scalar(0)).any() || !p.allFinite())
    throw ParameterError("entropy needs finite, non-negative probabilities");
  if (std::abs(p.sum() - Scalar(1)) > Scalar(kNormalizationTolerance))
    throw ParameterError("entropy needs a distribution summing to 1");

  std::vector<Scalar> terms;
  terms.reserve(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar v = p(i);
    if (v > Scalar(0)) terms.push_back(-v * std::log(v));
  }
  std::sort(terms.begin(), terms.end());
  Scalar h(0);
  for (Scalar t : terms) h += t;
  // The maximum is ln n; rounding in the terms can overshoot it by an ulp.
  return std::clamp(h, Scalar(0), Scalar(std::log(Scalar(p.size()))));
}

/// exp(x_i) / sum_j exp(x_j), computed after subtracting the maximum.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  if (logits.size() == 0) throw ParameterError("softmax of an empty vector");
  if (!logits.allFinite()) throw ParameterError("softmax needs finite inputs");
  const Scalar peak = logits.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

enum class Provenance { ground_truth, proxy };
enum class CountingMode { instances, presence };

std::string_view to_string(Provenance p);
std::string_view to_string(CountingMode m);
Provenance parse_provenance(std::string_view text);

/// p(room | object) for every object label of one space, with per-row entropies.
struct CooccurrenceTable {
  std::string object_space;
  std::string room_space;
  std::vector<std::string> object_labels;  ///< row order
  std::vector<std::string> room_labels;    ///< column order
  Eigen::MatrixXd probabilities;           ///< |objects| x |rooms|, rows sum to 1
  Eigen::VectorXd entropies;               ///< nats, one per row
  Provenance provenance = Provenance::ground_truth;
  double smoothing_alpha = 0.0;
  CountingMode counting = CountingMode::instances;
  std::string scorer_identity = "none";
  std::string template_version = "none";

  /// Row of `label`, or nullopt when the table has no such object.
  std::optional<Eigen::Index> row_of(std::string_view label) const;
  std::optional<double> entropy_of(std::string_view label) const;

  bool operator==(const CooccurrenceTable& o) const;
};

/// Laplace-smoothed empirical p(room | object):
///   (count(object in rooms labeled r) + alpha) / (count(object) + alpha * |rooms|).
/// Rows cover every label of `object_space`; columns follow the graph's room space.
CooccurrenceTable count_ground_truth(const SceneGraph& graph, const std::string& object_space, double alpha = 1.0,
                                     CountingMode counting = CountingMode::instances);

/// Softmax over the log probabilities of "A room containing <object> is called a(n) <room>."
/// for every room label.
Eigen::VectorXd proxy_conditional(const SentenceScorer& scorer, const std::string& object_label,
                                  std::span<const std::string> room_labels, const QueryTemplate& tmpl = {});

/// proxy_conditional for every object label, with up to `max_inflight` concurrent scorer
/// calls. Results are assembled by (object, room) key. Throws the first failure in
/// row-major order as a TransportError.
CooccurrenceTable build_proxy_table(const SentenceScorer& scorer, const SceneGraph& graph,
                                    const std::string& object_space, const QueryTemplate& tmpl = {},
                                    std::size_t max_inflight = 1);

/// The k distinct labels with lowest entropy, ascending; ties go to the lexicographically
/// smaller label. Fewer than k distinct labels returns them all.
std::vector<std::string> select_informative(std::span<const std::string> object_labels,
                                            const CooccurrenceTable& table, int k);

void write_cooccurrence(std::ostream& out, const CooccurrenceTable& table, const std::string& manifest = "");
CooccurrenceTable read_cooccurrence(std::istream& in);

}  // namespace roomlm
