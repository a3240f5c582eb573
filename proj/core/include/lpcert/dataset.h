#ifndef LPCERT_DATASET_H_
#define LPCERT_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lpcert/model.h"

namespace lpcert {

struct Dataset {
  std::vector<Sample> samples;
  std::size_t dimension = 0;
  std::string name;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct ParseOptions {
  // Fixes d; an index beyond it is a parse error. Otherwise d is the largest
  // index seen.
  std::optional<std::size_t> dimension;
  // Keep only rows labelled `first` or `second`, mapped to +1 and -1.
  std::optional<std::pair<double, double>> classes;
};

// Sparse "label index:value ..." lines with 1-based indices. Labels must be
// -1/+1 or 0/1 (0 maps to -1) unless `classes` is set. Missing features are
// 0. Blank lines and lines starting with '#' are skipped.
Dataset ParseDatasetText(std::string_view text, const ParseOptions& options = {},
                         std::string name = {});
Dataset ParseDataset(const std::filesystem::path& path,
                     const ParseOptions& options = {});

// Rescales every feature to [0, 1] with the dataset's own min and max;
// constant features become 0.
void MinMaxScale(Dataset& dataset);

// Deterministic shuffled split; the test part holds round(n * test_fraction)
// samples.
std::pair<Dataset, Dataset> TrainTestSplit(const Dataset& dataset,
                                           double test_fraction,
                                           std::uint64_t seed);

// First n samples of a seeded shuffle (all of them if n >= size).
Dataset Subsample(const Dataset& dataset, std::size_t n, std::uint64_t seed);

}  // namespace lpcert

#endif  // LPCERT_DATASET_H_
