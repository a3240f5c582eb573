// lpcert: train and verify robust stump and tree ensembles.
//
//   lpcert train  --data FILE --kind stumps --norm l1 --eps 1.0 --out M.json
//   lpcert verify --model M.json --data FILE --method lp-dp --norm l1 --eps 1
//   lpcert report --dir RUNS

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "lpcert/dataset.h"
#include "lpcert/errors.h"
#include "lpcert/model_io.h"
#include "lpcert/report.h"
#include "lpcert/trainer.h"

namespace {

enum ExitCode {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kParse = 3,
  kResource = 4,
  kTraining = 5,
};

struct DataFlags {
  std::string path;
  bool scale = false;
  double test_fraction = 0.2;
  std::string split;
  std::uint64_t seed = 0;
  std::string classes;
  std::size_t subsample = 0;
  std::size_t dimension = 0;
};

void AddDataFlags(CLI::App* cmd, DataFlags& flags, const char* default_split) {
  flags.split = default_split;
  cmd->add_option("--data", flags.path, "Sparse index:value dataset")
      ->required();
  cmd->add_flag("--scale", flags.scale,
                "Min-max scale every feature to [0,1] over the whole file");
  cmd->add_option("--test-fraction", flags.test_fraction,
                  "Fraction held out as the test split")
      ->capture_default_str();
  cmd->add_option("--split", flags.split, "Which part to use")
      ->check(CLI::IsMember({"train", "test", "all"}))
      ->capture_default_str();
  cmd->add_option("--seed", flags.seed, "Seed for splitting and subsampling")
      ->capture_default_str();
  cmd->add_option("--classes", flags.classes,
                  "Keep two labels a,b mapped to +1,-1");
  cmd->add_option("--subsample", flags.subsample,
                  "Keep N samples (seeded) before splitting");
  cmd->add_option("--dimension", flags.dimension,
                  "Number of features (default: largest index seen)");
}

lpcert::Dataset LoadData(const DataFlags& flags,
                         std::optional<std::size_t> dimension) {
  lpcert::ParseOptions options;
  if (flags.dimension > 0) dimension = flags.dimension;
  options.dimension = dimension;
  if (!flags.classes.empty()) {
    const auto comma = flags.classes.find(',');
    if (comma == std::string::npos) {
      throw lpcert::InputError("--classes expects a,b");
    }
    try {
      options.classes = {std::stod(flags.classes.substr(0, comma)),
                         std::stod(flags.classes.substr(comma + 1))};
    } catch (const std::exception&) {
      throw lpcert::InputError("--classes expects two numbers a,b");
    }
  }
  lpcert::Dataset data = lpcert::ParseDataset(flags.path, options);
  if (flags.scale) lpcert::MinMaxScale(data);
  if (flags.subsample > 0) {
    data = lpcert::Subsample(data, flags.subsample, flags.seed);
  }
  if (flags.split == "all") return data;
  auto [train, test] = lpcert::TrainTestSplit(data, flags.test_fraction,
                                              flags.seed);
  return flags.split == "train" ? std::move(train) : std::move(test);
}

struct TrainFlags {
  DataFlags data;
  std::string kind = "stumps";
  std::string norm = "linf";
  double eps = 0.0;
  int rounds = 10;
  double lr = 1.0;
  int schedule = 1;
  double precision = 0.01;
  int depth = 5;
  int candidates = 256;
  std::string out;
};

int RunTrain(const TrainFlags& f) {
  const lpcert::Dataset data = LoadData(f.data, std::nullopt);
  lpcert::TrainConfig config;
  config.perturbation = {lpcert::Norm::Parse(f.norm), f.eps};
  config.rounds = f.rounds;
  config.shrinkage = f.lr;
  config.schedule_length = f.schedule;
  config.precision = f.precision;
  config.max_depth = f.depth;
  config.candidate_cap = f.candidates;
  config.Validate();
  if (data.empty()) throw lpcert::TrainingError("training set is empty");

  std::cout << std::setprecision(6);
  std::cout << "training " << f.kind << " on " << data.size()
            << " samples, d=" << data.dimension << ", norm "
            << config.perturbation.norm.ToString() << ", eps " << f.eps
            << '\n';
  lpcert::Model model;
  if (f.kind == "stumps") {
    model = lpcert::FitStumpEnsemble(
        data, config, [](int round, double eps, double loss, double seconds) {
          std::cout << "round " << round << " eps=" << eps
                    << " robust_loss=" << loss << " time_s=" << seconds
                    << std::endl;
        });
  } else {
    model = lpcert::FitTreeEnsemble(
        data, config,
        [&](int round, const lpcert::Tree& tree, double loss, double seconds) {
          std::cout << "round " << round << " eps=" << f.eps
                    << " leaves=" << tree.NumLeaves()
                    << " robust_loss=" << loss << " time_s=" << seconds
                    << std::endl;
        });
  }
  lpcert::SaveModel(model, f.out);
  std::cout << "wrote " << f.out << '\n';
  return kOk;
}

struct VerifyFlags {
  DataFlags data;
  std::string model;
  std::string method;
  std::string norm = "linf";
  double eps = 0.0;
  double precision = 0.01;
  int clique_size = 2;
  int levels = 1;
  std::size_t max_cliques = 1'000'000;
  int jobs = 1;
  std::string out;
};

int RunVerify(const VerifyFlags& f) {
  const lpcert::Model model = lpcert::LoadModel(f.model);
  const std::size_t dimension =
      std::visit([](const auto& m) { return m.dimension; }, model);
  const lpcert::Dataset data = LoadData(f.data, dimension);

  lpcert::VerifyOptions options;
  options.method = lpcert::ParseMethod(f.method);
  options.perturbation = {lpcert::Norm::Parse(f.norm), f.eps};
  options.precision = f.precision;
  options.multilevel.clique_size = f.clique_size;
  options.multilevel.levels = f.levels;
  options.multilevel.max_cliques = f.max_cliques;
  options.jobs = f.jobs;

  const lpcert::VerificationReport report = lpcert::RunVerification(
      model, data, options, std::filesystem::path(f.model).stem().string());
  if (f.out.empty()) {
    lpcert::WriteReportCsv(std::cout, report);
  } else {
    std::ofstream csv(f.out);
    if (!csv) throw lpcert::InputError("cannot write " + f.out);
    lpcert::WriteReportCsv(csv, report);
    std::ofstream summary(f.out + ".summary");
    if (!summary) throw lpcert::InputError("cannot write " + f.out + ".summary");
    lpcert::WriteSummary(summary, report);
  }
  lpcert::WriteSummary(f.out.empty() ? std::cerr : std::cout, report);
  return kOk;
}

int RunReport(const std::string& dir, const std::string& out) {
  const lpcert::MergedReport merged = lpcert::MergeSummaries(dir);
  for (const std::string& w : merged.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  if (out.empty()) {
    lpcert::WriteMergedCsv(std::cout, merged);
  } else {
    std::ofstream file(out);
    if (!file) throw lpcert::InputError("cannot write " + out);
    lpcert::WriteMergedCsv(file, merged);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and verify robust stump and tree ensembles"};
  app.require_subcommand(1);

  TrainFlags train;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit a robust ensemble");
  AddDataFlags(train_cmd, train.data, "train");
  train_cmd->add_option("--kind", train.kind, "Model kind")
      ->check(CLI::IsMember({"stumps", "trees"}))
      ->capture_default_str();
  train_cmd->add_option("--norm", train.norm, "l0, l<p> or linf")
      ->capture_default_str();
  train_cmd->add_option("--eps", train.eps, "Target radius")
      ->capture_default_str();
  train_cmd->add_option("--rounds", train.rounds, "Stumps or trees to fit")
      ->capture_default_str();
  train_cmd->add_option("--lr", train.lr, "Shrinkage")->capture_default_str();
  train_cmd->add_option("--schedule", train.schedule,
                        "Rounds (or tree depths) over which eps ramps up")
      ->capture_default_str();
  train_cmd->add_option("--precision", train.precision, "Budget grid step")
      ->capture_default_str();
  train_cmd->add_option("--depth", train.depth, "Maximum tree depth")
      ->capture_default_str();
  train_cmd->add_option("--candidates", train.candidates,
                        "Thresholds per feature")
      ->capture_default_str();
  train_cmd->add_option("--out", train.out, "Model document to write")
      ->required();

  VerifyFlags verify;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Certify a model on a dataset");
  AddDataFlags(verify_cmd, verify.data, "test");
  verify_cmd->add_option("--model", verify.model, "Model document")
      ->required();
  verify_cmd->add_option("--method", verify.method,
                         "l0-exact, linf-exact, lp-dp, lp-exact, tree-single "
                         "or tree-multilevel")
      ->required();
  verify_cmd->add_option("--norm", verify.norm, "l0, l<p> or linf")
      ->capture_default_str();
  verify_cmd->add_option("--eps", verify.eps, "Radius")->capture_default_str();
  verify_cmd->add_option("--precision", verify.precision, "Budget grid step")
      ->capture_default_str();
  verify_cmd->add_option("--K", verify.clique_size, "Trees per clique group")
      ->capture_default_str();
  verify_cmd->add_option("--L", verify.levels, "Merge levels")
      ->capture_default_str();
  verify_cmd->add_option("--max-cliques", verify.max_cliques,
                         "Live pseudo-node limit per group")
      ->capture_default_str();
  verify_cmd->add_option("--jobs", verify.jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify_cmd->add_option("--out", verify.out,
                         "Per-sample CSV; the summary goes to <out>.summary");

  std::string report_dir, report_out;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Merge *.summary files into one CSV");
  report_cmd->add_option("--dir", report_dir, "Directory of summaries")
      ->required();
  report_cmd->add_option("--out", report_out, "CSV to write (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return RunTrain(train);
    if (*verify_cmd) return RunVerify(verify);
    return RunReport(report_dir, report_out);
  } catch (const lpcert::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const lpcert::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const lpcert::ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return kResource;
  } catch (const lpcert::TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return kTraining;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
