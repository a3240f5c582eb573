#ifndef LPCERT_MODEL_IO_H_
#define LPCERT_MODEL_IO_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "lpcert/model.h"

namespace lpcert {

inline constexpr int kModelFormatVersion = 1;

// JSON model document:
//   {"format_version": 1, "kind": "stumps", "dimension": d,
//    "stumps": [{"feature": j, "threshold": t, "left": a, "right": b}, ...]}
//   {"format_version": 1, "kind": "trees", "dimension": d,
//    "trees": [node, ...]}
// where node is {"feature", "threshold", "left": node, "right": node} or
// {"leaf": value}. Reals are written with round-trip precision.
std::string SerializeModel(const Model& model);

// Throws ParseError on malformed input, unknown version or kind, and
// non-finite values.
Model DeserializeModel(std::string_view document);

void SaveModel(const Model& model, const std::filesystem::path& path);
Model LoadModel(const std::filesystem::path& path);

}  // namespace lpcert

#endif  // LPCERT_MODEL_IO_H_
