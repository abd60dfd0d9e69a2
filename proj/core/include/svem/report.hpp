#pragma once

#include "svem/factor_model.hpp"
#include "svem/sim_harness.hpp"
#include "svem/svem_ensemble.hpp"
#include "svem/whole_model_test.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace svem {

struct ResponseData {
  std::string name;
  std::vector<Eigen::Index> rows;  // indices into Dataset::factors
  Eigen::VectorXd y;
};

struct Dataset {
  FactorTable factors;
  std::vector<ResponseData> responses;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;  // missing a factor value
};

// Missing cells: empty, "NA", "NaN", "." (case-insensitive). Rows missing any
// factor value are dropped for every response; rows missing a response value
// are dropped for that response only. Unparseable cells raise IngestionError
// with the data row (1-based, header excluded) and column name.
Dataset parse_dataset(std::string_view csv_text, std::span<const FactorSpec> specs,
                      std::span<const std::string> responses);
Dataset ingest_dataset(const std::filesystem::path& path, std::span<const FactorSpec> specs,
                       std::span<const std::string> responses);

// CSV rendering of a dataset-like table; categorical columns use level labels.
void write_factor_csv(std::ostream& out, std::span<const FactorSpec> specs, const FactorTable& t,
                      std::span<const std::string> extra_names = {},
                      const Eigen::MatrixXd* extra = nullptr);

// 4 decimals, "<.0001" below 0.0001, "*" appended below 0.05.
std::string format_p_value(double p);

// Shortest round-trip representation.
std::string format_number(double x);

struct RunConfig {
  std::filesystem::path data_path;
  std::filesystem::path config_path;
  std::vector<std::string> responses;
  Learner learner = Learner::forward_selection;
  TestSettings settings;  // settings.seed is the master seed
  std::filesystem::path output_dir;

  void validate() const;
};

struct ResponseOutcome {
  std::string name;
  Eigen::Index n_rows = 0;
  std::optional<TestResult> result;
  std::string error;
};

struct RunReport {
  std::vector<ResponseOutcome> outcomes;

  bool all_ok() const;
};

// Runs the whole-model test for each response on already-loaded data. The
// response at position i uses seed derive_seed(master, {response, i}).
RunReport run_tests(const StudyConfig& study, const Dataset& data, Learner learner,
                    const TestSettings& settings);

// Loads config and data, runs every response and writes pvalues.csv,
// distances.csv, summary.json, distances.svg (and errors.csv when a response
// fails) into config.output_dir.
RunReport run_test_command(const RunConfig& config);

void write_pvalue_table(std::ostream& out, const RunReport& report);
void write_distances_csv(std::ostream& out, const RunReport& report);
void write_errors_csv(std::ostream& out, const RunReport& report);
void write_summary_json(std::ostream& out, const RunConfig& config, const RunReport& report);
void write_distance_svg(std::ostream& out, const RunReport& report);

// Console rendering, one line per response.
std::string format_pvalue_console(const RunReport& report);

struct PowerRunMetadata {
  int scenario = 1;
  int trials = 0;
  TestSettings settings;
  PowerOptions options;
  std::vector<double> betas;
  std::vector<PowerMethod> methods;
};

void write_power_csv(std::ostream& out, std::span<const PowerPoint> points);
void write_power_metadata(std::ostream& out, const PowerRunMetadata& meta);
void write_power_svg(std::ostream& out, std::span<const PowerPoint> points, int scenario);

}  // namespace svem
