#include "cdimc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cdimc {

namespace {

std::vector<int> compact(std::span<const int> labels, int& count) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [value, id] : ids) id = next++;
  count = next;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids[l]);
  return out;
}

void check_lengths(std::span<const int> pred, std::span<const int> truth, const char* what) {
  if (pred.size() != truth.size())
    throw ContractError(std::string(what) + ": " + std::to_string(pred.size()) + " predictions for " +
                        std::to_string(truth.size()) + " labels");
  if (pred.empty()) throw ContractError(std::string(what) + ": empty labelings");
}

}  // namespace

Matrix contingency(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw ContractError("contingency: length mismatch");
  int kp = 0, kt = 0;
  const std::vector<int> p = compact(pred, kp);
  const std::vector<int> t = compact(truth, kt);
  Matrix table = Matrix::Zero(kp, kt);
  for (std::size_t i = 0; i < p.size(); ++i) table(p[i], t[i]) += 1.0;
  return table;
}

std::vector<int> solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw DimensionError("solve_assignment: cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};
  // Shortest augmenting path with potentials; 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int row = 1; row <= n; ++row) {
    match[0] = row;
    int col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const int r = match[col0];
      double delta = inf;
      int col1 = 0;
      for (int c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = cost(r - 1, c - 1) - u[r] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (int c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const int col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int c = 1; c <= n; ++c) assignment[match[c] - 1] = c - 1;
  return assignment;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth, "accuracy");
  const Matrix table = contingency(pred, truth);
  const Index size = std::max(table.rows(), table.cols());
  Matrix padded = Matrix::Zero(size, size);
  padded.topLeftCorner(table.rows(), table.cols()) = table;
  const double top = padded.maxCoeff();
  const std::vector<int> match = solve_assignment((top - padded.array()).matrix());
  double matched = 0.0;
  for (Index r = 0; r < size; ++r) matched += padded(r, match[static_cast<std::size_t>(r)]);
  return matched / static_cast<double>(pred.size());
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth, "nmi");
  const Matrix table = contingency(pred, truth);
  const double n = static_cast<double>(pred.size());
  const Vector rows = table.rowwise().sum();
  const Vector cols = table.colwise().sum().transpose();
  auto entropy = [n](const Vector& counts) {
    double h = 0.0;
    for (Index i = 0; i < counts.size(); ++i)
      if (counts[i] > 0.0) h -= counts[i] / n * std::log(counts[i] / n);
    return h;
  };
  const double hp = entropy(rows), ht = entropy(cols);
  if (table.rows() == 1 && table.cols() == 1) return 1.0;
  if (table.rows() == 1 || table.cols() == 1) return 0.0;
  double mi = 0.0;
  for (Index r = 0; r < table.rows(); ++r)
    for (Index c = 0; c < table.cols(); ++c) {
      const double nrc = table(r, c);
      if (nrc > 0.0) mi += nrc / n * std::log(nrc * n / (rows[r] * cols[c]));
    }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

}  // namespace cdimc
