#pragma once

#include <span>
#include <vector>

#include "cdimc/matrix.hpp"

namespace cdimc {

// Contingency table of two labelings. Labels are compacted to 0..K-1 in
// increasing order of value; rows index `pred`, columns index `truth`.
Matrix contingency(std::span<const int> pred, std::span<const int> truth);

// Minimum-cost perfect assignment on a square cost matrix (Hungarian method).
// Returns the column assigned to each row.
std::vector<int> solve_assignment(const Matrix& cost);

// Clustering accuracy: the best fraction of matched samples over bijections
// between predicted and true labels. The smaller label set is padded.
double accuracy(std::span<const int> pred, std::span<const int> truth);

// I(pred; truth) / sqrt(H(pred) H(truth)) with natural logarithms. 1 when both
// labelings are a single cluster, 0 when only one of them is.
double nmi(std::span<const int> pred, std::span<const int> truth);

}  // namespace cdimc
