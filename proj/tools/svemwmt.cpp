#include "svem/errors.hpp"
#include "svem/lnp_example.hpp"
#include "svem/parallel.hpp"
#include "svem/point_sampler.hpp"
#include "svem/report.hpp"
#include "svem/rng.hpp"
#include "svem/sim_harness.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace svem;

namespace {

struct Common {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string log_level = "warn";
};

void add_test_settings(CLI::App* cmd, TestSettings& s, std::string& family) {
  cmd->add_option("--nperm", s.n_perm, "Permuted-response SVEM fits")->capture_default_str();
  cmd->add_option("--npoint", s.n_point, "Evaluation points")->capture_default_str();
  cmd->add_option("--nboot", s.n_boot, "Bootstrap members per SVEM fit")->capture_default_str();
  cmd->add_option("--percent", s.percent, "Variance share retained (0-100]")->capture_default_str();
  cmd->add_option("--nsvem", s.n_svem, "SVEM fits to the observed response")->capture_default_str();
  cmd->add_option("--reference", family, "Reference family: shash, weibull or gamma")
      ->capture_default_str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IngestionError("cannot write '" + path.string() + "'");
  return f;
}

// Writes to `path`, or to stdout when it is empty or "-".
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  auto f = open_output(path);
  write(f);
}

Dataset load_single(const StudyConfig& study, const std::string& data, const std::string& response) {
  const std::vector<std::string> names{response};
  return ingest_dataset(data, study.factors, names);
}

FactorTable response_rows(const StudyConfig& study, const Dataset& d) {
  const auto& rows = d.responses.front().rows;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), d.factors.values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = d.factors.values.row(rows[i]);
  return make_factor_table(study.factors, std::move(m));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SVEM whole-model test"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--seed", common.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error, off")
      ->capture_default_str();

  // test
  RunConfig run;
  std::string responses;
  std::string learner = "fs";
  std::string family = "shash";
  auto* test = app.add_subcommand("test", "Whole-model test for each response");
  test->add_option("--data", run.data_path, "CSV dataset")->required();
  test->add_option("--config", run.config_path, "Study configuration (JSON)")->required();
  test->add_option("--responses", responses, "Comma-separated response columns")->required();
  test->add_option("--learner", learner, "fs or lasso")->capture_default_str();
  test->add_option("--out", run.output_dir, "Output directory")->default_val("svem_out");
  add_test_settings(test, run.settings, family);

  // simulate
  int scenario = 1;
  std::string beta_grid = "0,0.25,0.5,0.75,1,1.25,1.5,1.75,2";
  int trials = 300;
  std::string methods = "svem_fs,svem_lasso,anova_full,anova_reduced";
  std::string alpha_mode = "face_centered";
  PowerOptions power_options;
  TestSettings power_settings = desk_power_settings();
  std::string power_family = "shash";
  bool full = false;
  bool svg = false;
  std::string sim_out = "power";
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo power curves on a 3-factor CCD");
  simulate->add_option("--scenario", scenario, "1, 2 or 3")->capture_default_str();
  simulate->add_option("--beta-grid", beta_grid, "Comma-separated beta values")->capture_default_str();
  simulate->add_option("--trials", trials, "Trials per beta")->capture_default_str();
  simulate->add_option("--methods", methods, "Comma-separated methods")->capture_default_str();
  simulate->add_option("--alpha-mode", alpha_mode, "CCD axial distance: face_centered or rotatable")
      ->capture_default_str();
  simulate->add_option("--center-runs", power_options.n_center, "CCD center runs")
      ->capture_default_str();
  simulate->add_option("--alpha", power_options.alpha_level, "Rejection level")->capture_default_str();
  simulate->add_flag("--full", full, "nPerm 125, nPoint 2000, nBoot 200, 1500 trials");
  simulate->add_flag("--svg", svg, "Also write power.svg");
  simulate->add_option("--out", sim_out, "Output directory")->capture_default_str();
  add_test_settings(simulate, power_settings, power_family);

  // surface
  std::string surf_data, surf_config, surf_response, surf_out = "-", surf_learner = "fs";
  double surf_beta = 1.0;
  int surf_scenario = 1;
  int surf_nboot = 200;
  Eigen::Index surf_npoint = 2000;
  auto* surface = app.add_subcommand(
      "surface", "Sample v ~ Normal(f_hat, s_hat) over random points of a fitted SVEM");
  surface->add_option("--data", surf_data, "CSV dataset (omit to simulate a scenario on the CCD)");
  surface->add_option("--config", surf_config, "Study configuration (with --data)");
  surface->add_option("--response", surf_response, "Response column (with --data)");
  surface->add_option("--scenario", surf_scenario, "Scenario when simulating")->capture_default_str();
  surface->add_option("--beta", surf_beta, "Effect size when simulating")->capture_default_str();
  surface->add_option("--learner", surf_learner, "fs or lasso")->capture_default_str();
  surface->add_option("--nboot", surf_nboot, "Bootstrap members")->capture_default_str();
  surface->add_option("--npoint", surf_npoint, "Points to sample")->capture_default_str();
  surface->add_option("--out", surf_out, "Output CSV (default stdout)");

  // sample-points
  std::string sp_config, sp_out = "-";
  Eigen::Index sp_npoint = 2000;
  bool sp_lhs = false;
  auto* sample = app.add_subcommand("sample-points", "Random points over the study region");
  sample->add_option("--config", sp_config, "Study configuration")->required();
  sample->add_option("--npoint", sp_npoint, "Number of points")->capture_default_str();
  sample->add_flag("--lhs", sp_lhs, "Latin hypercube for continuous factors");
  sample->add_option("--out", sp_out, "Output CSV (default stdout)");

  // fit
  std::string fit_data, fit_config, fit_response, fit_out = "-", fit_learner = "fs";
  int fit_nboot = 200;
  auto* fit = app.add_subcommand("fit", "Fit one SVEM and dump its members");
  fit->add_option("--data", fit_data, "CSV dataset")->required();
  fit->add_option("--config", fit_config, "Study configuration")->required();
  fit->add_option("--response", fit_response, "Response column")->required();
  fit->add_option("--learner", fit_learner, "fs or lasso")->capture_default_str();
  fit->add_option("--nboot", fit_nboot, "Bootstrap members")->capture_default_str();
  fit->add_option("--out", fit_out, "Output file (default stdout)");

  // example-data
  std::string ex_out = "lnp_example";
  Eigen::Index ex_runs = 23;
  auto* example = app.add_subcommand("example-data", "Write the synthetic LNP study and dataset");
  example->add_option("--out", ex_out, "Output directory")->capture_default_str();
  example->add_option("--runs", ex_runs, "Number of runs")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("svemwmt"));
  spdlog::set_level(spdlog::level::from_str(common.log_level));
  const unsigned threads = resolve_threads(common.threads);

  try {
    if (*test) {
      run.responses = split_list(responses);
      run.learner = parse_learner(learner);
      run.settings.reference_family = parse_reference_family(family);
      run.settings.seed = common.seed;
      run.settings.threads = threads;
      const RunReport report = run_test_command(run);
      std::cout << format_pvalue_console(report);
      return report.all_ok() ? 0 : 1;
    }

    if (*simulate) {
      if (full) {
        power_settings.n_perm = 125;
        power_settings.n_point = 2000;
        power_settings.n_boot = 200;
        if (simulate->count("--trials") == 0) trials = 1500;
      }
      power_settings.reference_family = parse_reference_family(power_family);
      power_settings.seed = common.seed;
      power_options.alpha_mode = parse_ccd_alpha(alpha_mode);
      power_options.threads = threads;
      PowerRunMetadata meta;
      meta.scenario = scenario;
      meta.trials = trials;
      meta.settings = power_settings;
      meta.options = power_options;
      for (const auto& m : split_list(methods)) meta.methods.push_back(parse_power_method(m));
      for (const auto& b : split_list(beta_grid)) meta.betas.push_back(std::stod(b));

      std::vector<PowerPoint> points;
      for (double beta : meta.betas) {
        const auto spec = ScenarioSpec::make(scenario, beta);
        auto pts = estimate_power(spec, meta.methods, trials, power_settings, common.seed, power_options);
        for (const auto& p : pts)
          spdlog::info("beta {} {}: {}/{}", p.beta, to_string(p.method), p.rejections, p.trials);
        points.insert(points.end(), pts.begin(), pts.end());
      }
      const fs::path dir(sim_out);
      {
        auto f = open_output(dir / "power.csv");
        write_power_csv(f, points);
      }
      {
        auto f = open_output(dir / "power_meta.json");
        write_power_metadata(f, meta);
      }
      if (svg) {
        auto f = open_output(dir / "power.svg");
        write_power_svg(f, points, scenario);
      }
      write_power_csv(std::cout, points);
      return 0;
    }

    if (*surface) {
      const Learner lrn = parse_learner(surf_learner);
      std::vector<FactorSpec> specs;
      EnsembleModel model;
      if (!surf_data.empty()) {
        if (surf_config.empty() || surf_response.empty())
          throw SchemaError("--data requires --config and --response");
        const StudyConfig study = load_study_config(surf_config);
        const Dataset d = load_single(study, surf_data, surf_response);
        specs = study.factors;
        model = svem_fit(response_rows(study, d), d.responses.front().y, study.factors, study.terms,
                         lrn, surf_nboot, common.seed, threads);
      } else {
        const auto spec = ScenarioSpec::make(surf_scenario, surf_beta);
        const PowerOptions opts;
        specs = ccd_factor_specs(opts.alpha_mode);
        const FactorTable design = ccd_design(opts.alpha_mode, opts.n_center);
        const Eigen::VectorXd y =
            simulate_response(design, spec, derive_seed(common.seed, {stream::kTrial, 0}));
        model = svem_fit(design, y, specs, candidate_terms(spec), lrn, surf_nboot, common.seed, threads);
      }
      SamplerOptions so;
      so.threads = threads;
      const FactorTable T =
          sample_points(specs, surf_npoint, derive_seed(common.seed, {stream::kPoints}), so);
      const Eigen::MatrixXd v = sample_surface(model, T, common.seed);
      const std::vector<std::string> extra{"v"};
      emit(surf_out, [&](std::ostream& o) { write_factor_csv(o, specs, T, extra, &v); });
      return 0;
    }

    if (*sample) {
      const StudyConfig study = load_study_config(sp_config);
      SamplerOptions so;
      so.latin_hypercube = sp_lhs;
      so.threads = threads;
      const FactorTable T = sample_points(study.factors, sp_npoint, common.seed, so);
      emit(sp_out, [&](std::ostream& o) { write_factor_csv(o, study.factors, T); });
      return 0;
    }

    if (*fit) {
      const StudyConfig study = load_study_config(fit_config);
      const Dataset d = load_single(study, fit_data, fit_response);
      const EnsembleModel model = svem_fit(response_rows(study, d), d.responses.front().y,
                                           study.factors, study.terms, parse_learner(fit_learner),
                                           fit_nboot, common.seed, threads);
      emit(fit_out, [&](std::ostream& o) { write_model_dump(model, o); });
      return 0;
    }

    if (*example) {
      const LnpDataset data = simulate_lnp_dataset(common.seed, ex_runs);
      const StudyConfig study = lnp_study_config();
      const fs::path dir(ex_out);
      {
        auto f = open_output(dir / "lnp_study.json");
        f << lnp_study_config_text();
      }
      auto f = open_output(dir / "lnp_data.csv");
      write_factor_csv(f, study.factors, data.factors, data.response_names, &data.responses);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
