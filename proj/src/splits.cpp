#include "sns/splits.hpp"

#include <algorithm>
#include <cmath>

namespace sns {

double imbalance_ratio(const LabelSpec& labels, const std::vector<std::uint8_t>& scope) {
  std::vector<std::int64_t> sizes(labels.num_classes, 0);
  for (NodeId v = 0; v < labels.num_target_nodes(); ++v)
    if (scope[v] && labels.labels[v] != kUnlabeled) ++sizes[labels.labels[v]];
  auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  if (sizes.empty() || *lo == 0) throw DataError("degenerate class distribution");
  return static_cast<double>(*lo) / static_cast<double>(*hi);
}

LabelSpec build_imbalanced_split(const HinGraph& graph, const LabelSpec& labels_full,
                                 double label_rate, double imb_ratio,
                                 const std::vector<int>& minority_classes, std::uint64_t seed) {
  if (label_rate <= 0.0 || label_rate > 1.0) throw DataError("label_rate must be in (0,1]");
  if (imb_ratio <= 0.0 || imb_ratio > 1.0) throw DataError("imbalance ratio must be in (0,1]");

  LabelSpec out = labels_full;
  out.minority_classes = minority_classes;
  std::sort(out.minority_classes.begin(), out.minority_classes.end());
  const NodeId n = out.num_target_nodes();
  if (n != graph.num_nodes(out.target_type)) throw DataError("label vector does not match target node count");
  out.train_mask.assign(n, 0);
  out.val_mask.assign(n, 0);
  out.test_mask.assign(n, 0);

  const int m = out.num_classes;
  const auto majority_count =
      static_cast<NodeId>(std::ceil(label_rate * static_cast<double>(n) / m));
  const auto minority_count = static_cast<NodeId>(std::floor(imb_ratio * static_cast<double>(majority_count)));

  Rng rng(seed);
  for (int c = 0; c < m; ++c) {
    std::vector<NodeId> members;
    for (NodeId v = 0; v < n; ++v)
      if (out.labels[v] == c) members.push_back(v);
    const NodeId want = out.is_minority(c) ? minority_count : majority_count;
    if (want <= 0)
      throw DataError("class " + std::to_string(c) + ": requested train count is zero; raise label_rate or imbalance ratio");
    if (want > static_cast<NodeId>(members.size()))
      throw DataError("class " + std::to_string(c) + ": requested " + std::to_string(want) +
                      " train nodes but only " + std::to_string(members.size()) + " are labeled");
    std::shuffle(members.begin(), members.end(), rng);
    for (NodeId i = 0; i < want; ++i) out.train_mask[members[i]] = 1;

    // remainder 1:3 val:test, per class
    std::vector<NodeId> rest(members.begin() + want, members.end());
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    const auto val_n = static_cast<NodeId>(rest.size() / 4);
    for (std::size_t i = 0; i < rest.size(); ++i)
      (static_cast<NodeId>(i) < val_n ? out.val_mask : out.test_mask)[rest[i]] = 1;
  }
  out.validate();
  return out;
}

}  // namespace sns
