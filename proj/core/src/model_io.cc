#include "lpcert/model_io.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lpcert/errors.h"

namespace lpcert {
namespace {

using nlohmann::json;

json NodeToJson(const Tree& tree, int index) {
  const TreeNode& n = tree.node(index);
  if (n.is_leaf()) return json{{"leaf", n.value}};
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", NodeToJson(tree, n.left)},
              {"right", NodeToJson(tree, n.right)}};
}

double FiniteNumber(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) {
    throw ParseError(std::string("field '") + key + "' is not a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw ParseError(std::string("field '") + key + "' is not finite");
  }
  return d;
}

int FeatureIndex(const json& j) {
  const json& v = j.at("feature");
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError("field 'feature' must be a non-negative integer");
  }
  return v.get<int>();
}

Tree NodeFromJson(const json& j, int depth) {
  if (depth > 4096) throw ParseError("tree nesting too deep");
  if (!j.is_object()) throw ParseError("tree node is not an object");
  if (j.contains("leaf")) return Tree::Leaf(FiniteNumber(j, "leaf"));
  return Tree::Split(FeatureIndex(j), FiniteNumber(j, "threshold"),
                     NodeFromJson(j.at("left"), depth + 1),
                     NodeFromJson(j.at("right"), depth + 1));
}

}  // namespace

std::string SerializeModel(const Model& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  if (const auto* stumps = std::get_if<StumpEnsemble>(&model)) {
    doc["kind"] = "stumps";
    doc["dimension"] = stumps->dimension;
    json arr = json::array();
    for (const Stump& s : stumps->stumps) {
      arr.push_back({{"feature", s.feature},
                     {"threshold", s.threshold},
                     {"left", s.left_value},
                     {"right", s.right_value}});
    }
    doc["stumps"] = std::move(arr);
  } else {
    const auto& trees = std::get<TreeEnsemble>(model);
    doc["kind"] = "trees";
    doc["dimension"] = trees.dimension;
    json arr = json::array();
    for (const Tree& t : trees.trees) arr.push_back(NodeToJson(t, 0));
    doc["trees"] = std::move(arr);
  }
  return doc.dump(1) + "\n";
}

Model DeserializeModel(std::string_view document) {
  try {
    const json doc = json::parse(document);
    if (!doc.is_object()) throw ParseError("model document is not an object");
    const json& version = doc.at("format_version");
    if (!version.is_number_integer() ||
        version.get<int>() != kModelFormatVersion) {
      throw ParseError("unsupported model format_version " + version.dump());
    }
    const json& dim = doc.at("dimension");
    if (!dim.is_number_integer() || dim.get<long long>() < 0) {
      throw ParseError("dimension must be a non-negative integer");
    }
    const auto dimension = dim.get<std::size_t>();
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "stumps") {
      StumpEnsemble e;
      e.dimension = dimension;
      for (const json& s : doc.at("stumps")) {
        e.stumps.push_back(Stump{FeatureIndex(s), FiniteNumber(s, "threshold"),
                                 FiniteNumber(s, "left"),
                                 FiniteNumber(s, "right")});
      }
      e.Validate();
      return e;
    }
    if (kind == "trees") {
      TreeEnsemble e;
      e.dimension = dimension;
      for (const json& t : doc.at("trees")) e.trees.push_back(NodeFromJson(t, 0));
      e.Validate();
      return e;
    }
    throw ParseError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  } catch (const InputError& e) {
    throw ParseError(std::string("invalid model: ") + e.what());
  }
}

void SaveModel(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << SerializeModel(model);
  if (!out) throw InputError("failed writing " + path.string());
}

Model LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return DeserializeModel(buf.str());
}

}  // namespace lpcert
