#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdimc/matrix.hpp"

namespace cdimc {

// One availability flag per sample: 1 if the view was observed.
using Mask = std::vector<std::uint8_t>;
using Labels = std::vector<int>;

// n samples described by l views. views[v] is m_v x n with sample i in column
// i; columns whose mask bit is 0 hold NaN and must be filled explicitly
// (mean_fill / zero_fill) before any arithmetic.
struct MultiViewDataset {
  std::vector<Matrix> views;
  std::vector<Mask> masks;
  std::optional<Labels> labels;

  Index samples() const { return views.empty() ? 0 : views.front().cols(); }
  std::size_t view_count() const { return views.size(); }
  Index view_dim(std::size_t v) const { return views[v].rows(); }
  Index available(std::size_t v) const;
  // Mask of view v as a 0/1 real vector.
  Vector mask_vector(std::size_t v) const;
  bool complete() const;

  // Throws DataError if any invariant is broken: consistent n across views
  // and masks, at least one available view per sample, finite available
  // columns, NaN missing columns, labels of length n.
  void validate() const;
};

// Builds a complete dataset (all masks 1) and validates it.
MultiViewDataset make_complete(std::vector<Matrix> views, std::optional<Labels> labels = {});

enum class MaskMode {
  // Remove floor(p*n) instances from every view, keeping >= 1 view per sample.
  PerViewRemoval,
  // Two views only: floor(p*n) samples keep both, the rest are split between
  // view-1-only and view-2-only (view 1 takes the odd one).
  PairedSubset,
};

struct MaskSpec {
  MaskMode mode = MaskMode::PerViewRemoval;
  double rate = 0.0;
  std::uint64_t seed = 0;
};

std::string to_string(MaskMode mode);
MaskMode parse_mask_mode(const std::string& text);

// Number of instances selected by a rate, floor(rate * n), robust to the
// representation error of decimal rates such as 0.3.
Index rate_count(double rate, Index n);

MultiViewDataset make_incomplete(const MultiViewDataset& complete, const MaskSpec& spec);

// Missing columns replaced by the mean of the available columns of the view.
std::vector<Matrix> mean_fill(const MultiViewDataset& ds);
// Missing columns replaced by zeros.
std::vector<Matrix> zero_fill(const MultiViewDataset& ds);

// Per-feature zero mean / unit variance over available instances. Constant
// features are only centered.
MultiViewDataset standardize(const MultiViewDataset& ds);

// Reorders samples: sample i of the result is sample order[i] of ds.
MultiViewDataset permute_samples(const MultiViewDataset& ds, std::span<const Index> order);

struct SyntheticSpec {
  int clusters = 3;
  int views = 2;
  Index samples = 300;
  // One entry per view, or a single entry shared by all views.
  std::vector<Index> dims = {10};
  // Distance of every cluster center from the origin in latent units; centers
  // are pairwise separation * sqrt(2) apart and the latent noise is N(0, I).
  double separation = 4.0;
  double view_noise = 0.1;
  std::uint64_t seed = 0;
};

// Gaussian blobs in a latent space mapped into every view by its own random
// linear map. Labels are balanced (label of sample i is i mod k).
MultiViewDataset make_synthetic(const SyntheticSpec& spec);

}  // namespace cdimc
