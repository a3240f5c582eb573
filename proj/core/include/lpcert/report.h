#ifndef LPCERT_REPORT_H_
#define LPCERT_REPORT_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lpcert/dataset.h"
#include "lpcert/geometry.h"
#include "lpcert/model.h"
#include "lpcert/stump_verifier.h"
#include "lpcert/tree_verifier.h"

namespace lpcert {

enum class Method {
  kL0Exact,
  kLinfExact,
  kLpDp,
  kLpExact,
  kTreeSingle,      // sum of per-tree worst cases; exact for one tree
  kTreeMultilevel,
};

// "l0-exact", "linf-exact", "lp-dp", "lp-exact", "tree-single",
// "tree-multilevel". Throws InputError otherwise.
Method ParseMethod(std::string_view text);
std::string MethodName(Method method);

struct VerifyOptions {
  Method method = Method::kLpDp;
  PerturbationSpec perturbation;
  double precision = 0.01;      // lp-dp grid step
  MultiLevelConfig multilevel;
  int jobs = 1;
};

// Throws InputError when the method does not fit the model kind or norm.
void CheckMethod(const Model& model, const VerifyOptions& options);

VerificationResult VerifySample(const Model& model, const Sample& sample,
                                const VerifyOptions& options);

struct SampleRow {
  std::size_t sample_index = 0;
  int label = 0;
  double clean_pred = 0.0;
  double margin_lb = 0.0;
  bool robust = false;
  double time_ms = 0.0;
};

struct VerificationReport {
  std::vector<SampleRow> rows;
  std::string model;
  std::string method;
  std::string norm;
  double epsilon = 0.0;
  double standard_err = 0.0;   // percent, y * F(x) <= 0
  double verified_err = 0.0;   // percent, not certified robust
  double mean_time_ms = 0.0;
};

// Verifies every sample, spreading them over options.jobs threads. Rows come
// back in sample order.
VerificationReport RunVerification(const Model& model, const Dataset& dataset,
                                   const VerifyOptions& options,
                                   std::string model_name = {});

void WriteReportCsv(std::ostream& out, const VerificationReport& report);
// key=value lines.
void WriteSummary(std::ostream& out, const VerificationReport& report);

using SummaryRecord = std::map<std::string, std::string>;

// Parses key=value lines; blank lines and '#' comments are skipped. Throws
// ParseError on a line without '='.
SummaryRecord ParseSummary(std::string_view text);

struct MergedReport {
  std::vector<SummaryRecord> records;  // sorted by model, method, norm, eps
  std::vector<std::string> warnings;   // verified_err decreasing in eps
};

// Merges every *.summary file in a directory.
MergedReport MergeSummaries(const std::filesystem::path& directory);
MergedReport MergeRecords(std::vector<SummaryRecord> records);
void WriteMergedCsv(std::ostream& out, const MergedReport& merged);

}  // namespace lpcert

#endif  // LPCERT_REPORT_H_
