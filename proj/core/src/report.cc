#include "lpcert/report.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>
#include <type_traits>
#include <variant>

#include "lpcert/errors.h"

namespace lpcert {
namespace {

constexpr struct {
  Method method;
  std::string_view name;
} kMethodNames[] = {
    {Method::kL0Exact, "l0-exact"},     {Method::kLinfExact, "linf-exact"},
    {Method::kLpDp, "lp-dp"},           {Method::kLpExact, "lp-exact"},
    {Method::kTreeSingle, "tree-single"},
    {Method::kTreeMultilevel, "tree-multilevel"},
};

bool IsTreeMethod(Method m) {
  return m == Method::kTreeSingle || m == Method::kTreeMultilevel;
}

double FieldNumber(const SummaryRecord& r, const std::string& key) {
  const auto it = r.find(key);
  if (it == r.end()) return 0.0;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ParseError("summary field " + key + " is not a number: '" +
                     it->second + "'");
  }
}

std::string Field(const SummaryRecord& r, const std::string& key) {
  const auto it = r.find(key);
  return it == r.end() ? std::string() : it->second;
}

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Method ParseMethod(std::string_view text) {
  for (const auto& [method, name] : kMethodNames) {
    if (name == text) return method;
  }
  throw InputError("unknown method '" + std::string(text) + "'");
}

std::string MethodName(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return std::string(name);
  }
  return "unknown";
}

void CheckMethod(const Model& model, const VerifyOptions& options) {
  options.perturbation.Validate();
  const bool trees = std::holds_alternative<TreeEnsemble>(model);
  const Norm::Kind norm = options.perturbation.norm.kind();
  const std::string name = MethodName(options.method);
  if (IsTreeMethod(options.method) != trees) {
    throw InputError("method " + name + " does not apply to a " +
                     (trees ? "tree" : "stump") + " model");
  }
  switch (options.method) {
    case Method::kL0Exact:
      if (norm != Norm::Kind::kZero) {
        throw InputError("l0-exact needs --norm l0");
      }
      break;
    case Method::kLinfExact:
      if (norm != Norm::Kind::kInf) {
        throw InputError("linf-exact needs --norm linf");
      }
      break;
    case Method::kLpDp:
    case Method::kLpExact:
      if (norm != Norm::Kind::kP) {
        throw InputError(name + " needs an lp norm with p in (0, inf)");
      }
      if (options.method == Method::kLpDp && !(options.precision > 0.0)) {
        throw InputError("precision must be > 0");
      }
      break;
    case Method::kTreeSingle:
      break;
    case Method::kTreeMultilevel:
      if (options.multilevel.clique_size < 1 || options.multilevel.levels < 1) {
        throw InputError("multi-level verification needs K >= 1 and L >= 1");
      }
      break;
  }
}

VerificationResult VerifySample(const Model& model, const Sample& sample,
                                const VerifyOptions& options) {
  const PerturbationSpec& spec = options.perturbation;
  if (const auto* stumps = std::get_if<StumpEnsemble>(&model)) {
    switch (options.method) {
      case Method::kL0Exact:
        return VerifyL0(*stumps, sample, static_cast<int>(spec.epsilon));
      case Method::kLinfExact:
        return VerifyLinf(*stumps, sample, spec.epsilon);
      case Method::kLpDp:
        return VerifyLpDp(*stumps, sample, spec.norm.p(), spec.epsilon,
                          options.precision);
      case Method::kLpExact:
        return VerifyLpExact(*stumps, sample, spec.norm.p(), spec.epsilon);
      default:
        break;
    }
    throw InputError("method does not apply to a stump model");
  }
  const auto& trees = std::get<TreeEnsemble>(model);
  if (options.method == Method::kTreeMultilevel) {
    return VerifyEnsembleMultilevel(trees, sample, spec, options.multilevel);
  }
  if (options.method != Method::kTreeSingle) {
    throw InputError("method does not apply to a tree model");
  }
  double margin = 0.0;
  for (const Tree& tree : trees.trees) {
    margin += VerifySingleTree(tree, trees.dimension, sample, spec)
                  .margin_lower_bound;
  }
  return VerificationResult::Make(margin, trees.trees.size() <= 1);
}

VerificationReport RunVerification(const Model& model, const Dataset& dataset,
                                   const VerifyOptions& options,
                                   std::string model_name) {
  CheckMethod(model, options);
  const std::size_t dimension = std::visit(
      [](const auto& m) { return m.dimension; }, model);
  if (dataset.dimension != dimension) {
    throw InputError("dataset has " + std::to_string(dataset.dimension) +
                     " features, model expects " + std::to_string(dimension));
  }

  VerificationReport report;
  report.model = std::move(model_name);
  report.method = MethodName(options.method);
  report.norm = options.perturbation.norm.ToString();
  report.epsilon = options.perturbation.epsilon;
  report.rows.resize(dataset.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < dataset.size(); i = next++) {
      const Sample& s = dataset.samples[i];
      try {
        const auto start = std::chrono::steady_clock::now();
        const VerificationResult r = VerifySample(model, s, options);
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
        const double clean = std::visit(
            [&](const auto& m) {
              if constexpr (std::is_same_v<std::decay_t<decltype(m)>,
                                           StumpEnsemble>) {
                return EvaluateStumpEnsemble(m, s.features);
              } else {
                return EvaluateTreeEnsemble(m, s.features);
              }
            },
            model);
        report.rows[i] = {i, s.label, clean, r.margin_lower_bound, r.robust, ms};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = dataset.size();
      }
    }
  };
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t wrong = 0, not_robust = 0;
  double total_ms = 0.0;
  for (const SampleRow& row : report.rows) {
    if (row.label * row.clean_pred <= 0.0) ++wrong;
    if (!row.robust) ++not_robust;
    total_ms += row.time_ms;
  }
  if (!report.rows.empty()) {
    const double n = static_cast<double>(report.rows.size());
    report.standard_err = 100.0 * static_cast<double>(wrong) / n;
    report.verified_err = 100.0 * static_cast<double>(not_robust) / n;
    report.mean_time_ms = total_ms / n;
  }
  return report;
}

void WriteReportCsv(std::ostream& out, const VerificationReport& report) {
  out << "sample_index,label,clean_pred,margin_lb,robust,time_ms\n";
  out << std::setprecision(10);
  for (const SampleRow& row : report.rows) {
    out << row.sample_index << ',' << row.label << ',' << row.clean_pred << ','
        << row.margin_lb << ',' << (row.robust ? 1 : 0) << ',' << row.time_ms
        << '\n';
  }
}

void WriteSummary(std::ostream& out, const VerificationReport& report) {
  out << std::setprecision(10);
  out << "model=" << report.model << '\n'
      << "method=" << report.method << '\n'
      << "norm=" << report.norm << '\n'
      << "epsilon=" << report.epsilon << '\n'
      << "n=" << report.rows.size() << '\n'
      << "standard_err=" << report.standard_err << '\n'
      << "verified_err=" << report.verified_err << '\n'
      << "mean_time_ms=" << report.mean_time_ms << '\n';
}

SummaryRecord ParseSummary(std::string_view text) {
  SummaryRecord record;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    const std::string_view line = Trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{}
                                         : text.substr(eol + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("summary line " + std::to_string(line_no) +
                       ": expected key=value");
    }
    record[std::string(Trim(line.substr(0, eq)))] =
        std::string(Trim(line.substr(eq + 1)));
  }
  return record;
}

MergedReport MergeRecords(std::vector<SummaryRecord> records) {
  const auto key = [](const SummaryRecord& r) {
    return std::make_tuple(Field(r, "model"), Field(r, "method"),
                           Field(r, "norm"), FieldNumber(r, "epsilon"));
  };
  std::stable_sort(records.begin(), records.end(),
                   [&](const SummaryRecord& a, const SummaryRecord& b) {
                     return key(a) < key(b);
                   });
  MergedReport merged;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const SummaryRecord& a = records[i - 1];
    const SummaryRecord& b = records[i];
    if (Field(a, "model") != Field(b, "model") ||
        Field(a, "method") != Field(b, "method") ||
        Field(a, "norm") != Field(b, "norm")) {
      continue;
    }
    if (FieldNumber(b, "verified_err") < FieldNumber(a, "verified_err")) {
      merged.warnings.push_back(
          "verified_err decreases from eps=" + Field(a, "epsilon") +
          " to eps=" + Field(b, "epsilon") + " for model '" +
          Field(a, "model") + "', method " + Field(a, "method") + ", norm " +
          Field(a, "norm"));
    }
  }
  merged.records = std::move(records);
  return merged;
}

MergedReport MergeSummaries(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory)) {
    throw InputError("not a directory: " + directory.string());
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".summary") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<SummaryRecord> records;
  for (const auto& path : paths) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    records.push_back(ParseSummary(buf.str()));
  }
  return MergeRecords(std::move(records));
}

void WriteMergedCsv(std::ostream& out, const MergedReport& merged) {
  static const char* const kColumns[] = {
      "model",        "method",       "norm",        "epsilon", "n",
      "standard_err", "verified_err", "mean_time_ms"};
  for (std::size_t c = 0; c < std::size(kColumns); ++c) {
    out << (c ? "," : "") << kColumns[c];
  }
  out << '\n';
  for (const SummaryRecord& r : merged.records) {
    for (std::size_t c = 0; c < std::size(kColumns); ++c) {
      out << (c ? "," : "") << Field(r, kColumns[c]);
    }
    out << '\n';
  }
}

}  // namespace lpcert
