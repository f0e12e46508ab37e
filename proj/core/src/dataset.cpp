#include "cdimc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cdimc {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Fisher-Yates over [0, n); the first `take` entries form a uniform sample.
std::vector<Index> sample_without_replacement(Index n, Index take, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < take; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(take));
  return idx;
}

void blank_missing(MultiViewDataset& ds) {
  for (std::size_t v = 0; v < ds.view_count(); ++v)
    for (Index i = 0; i < ds.samples(); ++i)
      if (ds.masks[v][static_cast<std::size_t>(i)] == 0) ds.views[v].col(i).setConstant(kMissing);
}

}  // namespace

Index MultiViewDataset::available(std::size_t v) const {
  return static_cast<Index>(std::count(masks[v].begin(), masks[v].end(), std::uint8_t{1}));
}

Vector MultiViewDataset::mask_vector(std::size_t v) const {
  Vector m(samples());
  for (Index i = 0; i < samples(); ++i) m[i] = masks[v][static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  return m;
}

bool MultiViewDataset::complete() const {
  for (const Mask& m : masks)
    if (std::find(m.begin(), m.end(), std::uint8_t{0}) != m.end()) return false;
  return true;
}

void MultiViewDataset::validate() const {
  if (views.empty()) throw DataError("dataset: no views");
  if (masks.size() != views.size())
    throw DataError("dataset: " + std::to_string(masks.size()) + " masks for " +
                    std::to_string(views.size()) + " views");
  const Index n = samples();
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].cols() != n)
      throw DataError("dataset: view " + std::to_string(v + 1) + " has " +
                      std::to_string(views[v].cols()) + " samples, expected " + std::to_string(n));
    if (views[v].rows() == 0) throw DataError("dataset: view " + std::to_string(v + 1) + " has no features");
    if (static_cast<Index>(masks[v].size()) != n)
      throw DataError("dataset: mask of view " + std::to_string(v + 1) + " has wrong length");
  }
  for (Index i = 0; i < n; ++i) {
    int present = 0;
    for (std::size_t v = 0; v < views.size(); ++v) {
      const std::uint8_t bit = masks[v][static_cast<std::size_t>(i)];
      if (bit > 1) throw DataError("dataset: mask entries must be 0 or 1");
      if (bit == 1) {
        ++present;
        if (!views[v].col(i).allFinite())
          throw DataError("dataset: sample " + std::to_string(i) + " view " + std::to_string(v + 1) +
                          " is marked available but has non-finite values");
      } else if (!views[v].col(i).array().isNaN().all()) {
        throw DataError("dataset: sample " + std::to_string(i) + " view " + std::to_string(v + 1) +
                        " is marked missing but holds values");
      }
    }
    if (present == 0) throw DataError("dataset: sample " + std::to_string(i) + " has no available view");
  }
  if (labels && static_cast<Index>(labels->size()) != n)
    throw DataError("dataset: " + std::to_string(labels->size()) + " labels for " +
                    std::to_string(n) + " samples");
}

MultiViewDataset make_complete(std::vector<Matrix> views, std::optional<Labels> labels) {
  MultiViewDataset ds;
  ds.views = std::move(views);
  for (const Matrix& x : ds.views) ds.masks.emplace_back(static_cast<std::size_t>(x.cols()), 1);
  ds.labels = std::move(labels);
  ds.validate();
  return ds;
}

std::string to_string(MaskMode mode) {
  return mode == MaskMode::PerViewRemoval ? "per-view-removal" : "paired-subset";
}

MaskMode parse_mask_mode(const std::string& text) {
  if (text == "per-view-removal") return MaskMode::PerViewRemoval;
  if (text == "paired-subset") return MaskMode::PairedSubset;
  throw ConfigError("unknown mask mode '" + text + "' (expected per-view-removal or paired-subset)");
}

Index rate_count(double rate, Index n) {
  return static_cast<Index>(std::floor(rate * static_cast<double>(n) + 1e-9));
}

MultiViewDataset make_incomplete(const MultiViewDataset& complete, const MaskSpec& spec) {
  complete.validate();
  if (!complete.complete()) throw ContractError("make_incomplete: input must have every view available");
  if (!(spec.rate >= 0.0 && spec.rate < 1.0))
    throw ConfigError("make_incomplete: rate must lie in [0, 1), got " + std::to_string(spec.rate));

  const Index n = complete.samples();
  const std::size_t l = complete.view_count();
  MultiViewDataset out = complete;
  Rng rng(spec.seed);

  if (spec.mode == MaskMode::PairedSubset) {
    if (l != 2) throw ConfigError("make_incomplete: paired-subset needs exactly 2 views, got " + std::to_string(l));
    const Index paired = rate_count(spec.rate, n);
    std::vector<Index> order = sample_without_replacement(n, n, rng);
    const Index rest = n - paired;
    const Index first_only = rest - rest / 2;
    for (Index pos = paired; pos < n; ++pos) {
      const auto i = static_cast<std::size_t>(order[static_cast<std::size_t>(pos)]);
      if (pos < paired + first_only)
        out.masks[1][i] = 0;
      else
        out.masks[0][i] = 0;
    }
    blank_missing(out);
    out.validate();
    return out;
  }

  const Index removed = rate_count(spec.rate, n);
  if (removed == 0) return out;
  if (static_cast<Index>(l) * removed > static_cast<Index>(l - 1) * n)
    throw ConfigError("make_incomplete: removing " + std::to_string(removed) + " of " + std::to_string(n) +
                      " instances from each of " + std::to_string(l) +
                      " views cannot leave every sample with a view");

  std::vector<int> present(static_cast<std::size_t>(n), static_cast<int>(l));
  for (std::size_t v = 0; v < l; ++v) {
    for (Index i : sample_without_replacement(n, removed, rng)) {
      out.masks[v][static_cast<std::size_t>(i)] = 0;
      --present[static_cast<std::size_t>(i)];
    }
  }

  // Re-draw offending removals: give the sample back one view and move that
  // removal to a sample which still has another view. Per-view counts stay
  // exact and no new violation can appear.
  std::vector<std::size_t> view_order(l);
  std::iota(view_order.begin(), view_order.end(), std::size_t{0});
  for (Index i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (present[si] > 0) continue;
    std::shuffle(view_order.begin(), view_order.end(), rng);
    bool fixed = false;
    for (std::size_t v : view_order) {
      std::vector<std::size_t> candidates;
      for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j)
        if (j != si && out.masks[v][j] == 1 && present[j] >= 2) candidates.push_back(j);
      if (candidates.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      const std::size_t j = candidates[pick(rng)];
      out.masks[v][si] = 1;
      out.masks[v][j] = 0;
      present[si] = 1;
      --present[j];
      fixed = true;
      break;
    }
    if (!fixed) throw ConfigError("make_incomplete: no valid re-draw for sample " + std::to_string(i));
  }
  blank_missing(out);
  out.validate();
  return out;
}

std::vector<Matrix> mean_fill(const MultiViewDataset& ds) {
  std::vector<Matrix> out;
  out.reserve(ds.view_count());
  for (std::size_t v = 0; v < ds.view_count(); ++v) {
    const Matrix& x = ds.views[v];
    Vector mean = Vector::Zero(x.rows());
    Index count = 0;
    for (Index i = 0; i < x.cols(); ++i) {
      if (ds.masks[v][static_cast<std::size_t>(i)] == 0) continue;
      mean += x.col(i);
      ++count;
    }
    if (count == 0) throw DataError("mean_fill: view " + std::to_string(v + 1) + " has no available instance");
    mean /= static_cast<double>(count);
    Matrix filled = x;
    for (Index i = 0; i < x.cols(); ++i)
      if (ds.masks[v][static_cast<std::size_t>(i)] == 0) filled.col(i) = mean;
    out.push_back(std::move(filled));
  }
  return out;
}

std::vector<Matrix> zero_fill(const MultiViewDataset& ds) {
  std::vector<Matrix> out;
  out.reserve(ds.view_count());
  for (std::size_t v = 0; v < ds.view_count(); ++v) {
    Matrix filled = ds.views[v];
    for (Index i = 0; i < filled.cols(); ++i)
      if (ds.masks[v][static_cast<std::size_t>(i)] == 0) filled.col(i).setZero();
    out.push_back(std::move(filled));
  }
  return out;
}

MultiViewDataset standardize(const MultiViewDataset& ds) {
  MultiViewDataset out = ds;
  for (std::size_t v = 0; v < ds.view_count(); ++v) {
    Matrix& x = out.views[v];
    const Index count = ds.available(v);
    if (count == 0) continue;
    for (Index f = 0; f < x.rows(); ++f) {
      double mean = 0.0;
      for (Index i = 0; i < x.cols(); ++i)
        if (ds.masks[v][static_cast<std::size_t>(i)]) mean += x(f, i);
      mean /= static_cast<double>(count);
      double var = 0.0;
      for (Index i = 0; i < x.cols(); ++i)
        if (ds.masks[v][static_cast<std::size_t>(i)]) var += (x(f, i) - mean) * (x(f, i) - mean);
      const double sd = std::sqrt(var / static_cast<double>(count));
      const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
      for (Index i = 0; i < x.cols(); ++i)
        if (ds.masks[v][static_cast<std::size_t>(i)]) x(f, i) = (x(f, i) - mean) * scale;
    }
  }
  return out;
}

MultiViewDataset permute_samples(const MultiViewDataset& ds, std::span<const Index> order) {
  const Index n = ds.samples();
  if (static_cast<Index>(order.size()) != n) throw DimensionError("permute_samples: order has wrong length");
  MultiViewDataset out;
  out.views.reserve(ds.view_count());
  for (std::size_t v = 0; v < ds.view_count(); ++v) {
    Matrix x(ds.views[v].rows(), n);
    Mask m(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const Index src = order[static_cast<std::size_t>(i)];
      if (src < 0 || src >= n) throw ContractError("permute_samples: index out of range");
      x.col(i) = ds.views[v].col(src);
      m[static_cast<std::size_t>(i)] = ds.masks[v][static_cast<std::size_t>(src)];
    }
    out.views.push_back(std::move(x));
    out.masks.push_back(std::move(m));
  }
  if (ds.labels) {
    Labels l(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      l[static_cast<std::size_t>(i)] = (*ds.labels)[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    out.labels = std::move(l);
  }
  return out;
}

MultiViewDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.clusters < 1) throw ConfigError("make_synthetic: need at least one cluster");
  if (spec.views < 1) throw ConfigError("make_synthetic: need at least one view");
  if (spec.samples < spec.clusters) throw ConfigError("make_synthetic: fewer samples than clusters");
  if (spec.dims.size() != 1 && spec.dims.size() != static_cast<std::size_t>(spec.views))
    throw ConfigError("make_synthetic: dims must have one entry or one per view");
  for (Index d : spec.dims)
    if (d < 1) throw ConfigError("make_synthetic: view dimensions must be positive");

  Rng rng(spec.seed);
  const Index latent = std::max(spec.clusters, 2);
  const Index n = spec.samples;

  // Random rotation of scaled basis vectors: equidistant, well-defined gaps.
  Eigen::HouseholderQR<Matrix> qr(random_normal(latent, latent, 1.0, rng));
  const Matrix rotation = qr.householderQ();
  const Matrix centers = spec.separation * rotation.leftCols(spec.clusters);

  Labels labels(static_cast<std::size_t>(n));
  Matrix z = random_normal(latent, n, 1.0, rng);
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % spec.clusters);
    labels[static_cast<std::size_t>(i)] = c;
    z.col(i) += centers.col(c);
  }

  std::vector<Matrix> views;
  for (int v = 0; v < spec.views; ++v) {
    const Index dim = spec.dims.size() == 1 ? spec.dims[0] : spec.dims[static_cast<std::size_t>(v)];
    const Matrix map = random_normal(dim, latent, 1.0 / std::sqrt(static_cast<double>(latent)), rng);
    Matrix x = map * z;
    if (spec.view_noise > 0.0) x += random_normal(dim, n, spec.view_noise, rng);
    views.push_back(std::move(x));
  }
  return make_complete(std::move(views), std::move(labels));
}

}  // namespace cdimc
