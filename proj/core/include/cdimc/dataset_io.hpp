#pragma once

#include <filesystem>
#include <string>

#include "cdimc/dataset.hpp"

namespace cdimc {

// On-disk dataset layout (one directory):
//
//   view_1.csv ... view_l.csv  n rows x m_v comma-separated decimals; the
//                              literal token NaN marks a missing instance
//   mask.csv                   optional, n rows x l columns of 0/1; absent
//                              means every view is available
//   labels.csv                 optional, n rows with one integer each
//
// No header rows, '.' decimal separator, LF line endings. Values are written
// in shortest round-trip form, so save followed by load is exact.
MultiViewDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir);

// Reads a label vector. Each row is either `label` or `index,label`; with the
// second form the indices must be 0..n-1 in order.
Labels read_labels(const std::filesystem::path& file);
void write_labels(const Labels& labels, const std::filesystem::path& file);
// Rows of `index,cluster`.
void write_assignments(const Labels& clusters, const std::filesystem::path& file);

// Shortest decimal text that parses back to exactly `value`; NaN as "NaN".
std::string format_double(double value);

}  // namespace cdimc
