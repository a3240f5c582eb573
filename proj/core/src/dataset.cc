#include "lpcert/dataset.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>

#include "lpcert/errors.h"
#include "lpcert/geometry.h"

namespace lpcert {
namespace {

double ParseNumber(std::string_view token, std::size_t line_no) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" +
                     std::string(token) + "'");
  }
  return v;
}

std::vector<std::size_t> ShuffledIndices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Plain Fisher-Yates on mt19937_64 output: identical across standard
  // libraries, unlike std::shuffle.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng() % i]);
  }
  return idx;
}

Dataset Pick(const Dataset& src, std::span<const std::size_t> idx,
             std::string suffix) {
  Dataset out;
  out.dimension = src.dimension;
  out.name = src.name + suffix;
  out.samples.reserve(idx.size());
  for (std::size_t i : idx) out.samples.push_back(src.samples[i]);
  return out;
}

}  // namespace

Dataset ParseDatasetText(std::string_view text, const ParseOptions& options,
                         std::string name) {
  struct Row {
    int label;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::size_t max_index = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;

    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      std::size_t end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      if (end > pos) tokens.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    if (tokens.empty() || tokens.front().front() == '#') continue;

    const double raw_label = ParseNumber(tokens.front(), line_no);
    int label = 0;
    if (options.classes) {
      if (raw_label == options.classes->first) {
        label = 1;
      } else if (raw_label == options.classes->second) {
        label = -1;
      } else {
        continue;
      }
    } else if (raw_label == 1.0) {
      label = 1;
    } else if (raw_label == -1.0 || raw_label == 0.0) {
      label = -1;
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": label '" +
                       std::string(tokens.front()) +
                       "' is not one of -1, +1, 0, 1");
    }

    Row row{label, {}};
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::string_view tok = tokens[t];
      const std::size_t colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected index:value, got '" + std::string(tok) +
                         "'");
      }
      std::size_t index = 0;
      const std::string_view idx_text = tok.substr(0, colon);
      auto [ptr, ec] = std::from_chars(idx_text.data(),
                                       idx_text.data() + idx_text.size(), index);
      if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() ||
          index == 0) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": bad feature index '" + std::string(idx_text) + "'");
      }
      if (options.dimension && index > *options.dimension) {
        throw ParseError("line " + std::to_string(line_no) + ": feature index " +
                         std::to_string(index) + " exceeds dimension " +
                         std::to_string(*options.dimension));
      }
      max_index = std::max(max_index, index);
      row.entries.emplace_back(index - 1, ParseNumber(tok.substr(colon + 1), line_no));
    }
    rows.push_back(std::move(row));
  }

  Dataset out;
  out.name = std::move(name);
  out.dimension = options.dimension.value_or(max_index);
  out.samples.reserve(rows.size());
  for (Row& row : rows) {
    Sample s;
    s.label = row.label;
    s.features.assign(out.dimension, 0.0);
    for (const auto& [i, v] : row.entries) s.features[i] = v;
    out.samples.push_back(std::move(s));
  }
  return out;
}

Dataset ParseDataset(const std::filesystem::path& path,
                     const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseDatasetText(buf.str(), options, path.filename().string());
}

void MinMaxScale(Dataset& dataset) {
  for (std::size_t j = 0; j < dataset.dimension; ++j) {
    double lo = kInf, hi = -kInf;
    for (const Sample& s : dataset.samples) {
      lo = std::min(lo, s.features[j]);
      hi = std::max(hi, s.features[j]);
    }
    const double range = hi - lo;
    for (Sample& s : dataset.samples) {
      s.features[j] = range > 0.0 ? (s.features[j] - lo) / range : 0.0;
    }
  }
}

std::pair<Dataset, Dataset> TrainTestSplit(const Dataset& dataset,
                                           double test_fraction,
                                           std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw InputError("test fraction must lie in [0, 1]");
  }
  const auto idx = ShuffledIndices(dataset.size(), seed);
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(dataset.size())));
  const std::span<const std::size_t> all(idx);
  return {Pick(dataset, all.subspan(n_test), ":train"),
          Pick(dataset, all.first(n_test), ":test")};
}

Dataset Subsample(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
  const auto idx = ShuffledIndices(dataset.size(), seed);
  return Pick(dataset, std::span<const std::size_t>(idx).first(std::min(n, idx.size())),
              "");
}

}  // namespace lpcert
