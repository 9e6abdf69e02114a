#pragma once

#include "sns/hin_graph.hpp"

namespace sns {

// min class size / max class size over labeled nodes selected by `scope`.
// Throws DataError when any class is empty in scope.
double imbalance_ratio(const LabelSpec& labels, const std::vector<std::uint8_t>& scope);

// Builds train/val/test masks from fully observed labels. Per majority class
// the train mask receives ceil(label_rate * |target nodes| / m) nodes, per
// minority class floor(imb_ratio * that), sampled without replacement under
// `seed`. Remaining labeled nodes split 1:3 into val:test, stratified by
// class. Unlabeled nodes stay outside all masks.
LabelSpec build_imbalanced_split(const HinGraph& graph, const LabelSpec& labels_full,
                                 double label_rate, double imb_ratio,
                                 const std::vector<int>& minority_classes, std::uint64_t seed);

}  // namespace sns
