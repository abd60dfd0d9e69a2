#include "svem/lnp_example.hpp"

#include "svem/point_sampler.hpp"
#include "svem/rng.hpp"

#include <random>

namespace svem {
namespace {

constexpr std::string_view kConfig = R"json({
  "factors": [
    {"name": "PEG", "role": "mixture", "range": [0.01, 0.05]},
    {"name": "Helper", "role": "mixture", "range": [0.1, 0.6]},
    {"name": "Ionizable", "role": "mixture", "range": [0.1, 0.6]},
    {"name": "Cholesterol", "role": "mixture", "range": [0.1, 0.6]},
    {"name": "Ionizable Lipid Type", "role": "categorical", "levels": ["H101", "H102", "H103"]},
    {"name": "N_P_ratio", "role": "continuous", "range": [6, 14]},
    {"name": "flow rate", "role": "continuous", "range": [1, 3]}
  ],
  "terms": [
    "(Intercept)",
    "PEG",
    "Helper",
    "Ionizable",
    "Cholesterol",
    "Ionizable Lipid Type",
    "N_P_ratio",
    "flow rate",
    "PEG * Helper",
    "PEG * Ionizable",
    "Helper * Ionizable",
    "PEG * Cholesterol",
    "Helper * Cholesterol",
    "Ionizable * Cholesterol",
    "Scheffe Cubic(PEG, Helper)",
    "Scheffe Cubic(PEG, Ionizable)",
    "PEG * Helper * Ionizable",
    "Scheffe Cubic(Helper, Ionizable)",
    "Scheffe Cubic(PEG, Cholesterol)",
    "PEG * Helper * Cholesterol",
    "Scheffe Cubic(Helper, Cholesterol)",
    "PEG * Ionizable * Cholesterol",
    "Helper * Ionizable * Cholesterol",
    "Scheffe Cubic(Ionizable, Cholesterol)",
    "Ionizable Lipid Type * N_P_ratio",
    "N_P_ratio * N_P_ratio",
    "Ionizable Lipid Type * flow rate",
    "N_P_ratio * flow rate",
    "flow rate * flow rate",
    "N_P_ratio * N_P_ratio * Ionizable Lipid Type",
    "N_P_ratio * N_P_ratio * flow rate",
    "flow rate * flow rate * Ionizable Lipid Type",
    "flow rate * flow rate * N_P_ratio",
    "PEG * Ionizable Lipid Type",
    "PEG * N_P_ratio",
    "PEG * flow rate",
    "Helper * Ionizable Lipid Type",
    "Helper * N_P_ratio",
    "Helper * flow rate",
    "Ionizable * Ionizable Lipid Type",
    "Ionizable * N_P_ratio",
    "Ionizable * flow rate",
    "Cholesterol * Ionizable Lipid Type",
    "Cholesterol * N_P_ratio",
    "Cholesterol * flow rate",
    "PEG * Helper * Ionizable Lipid Type",
    "PEG * Helper * N_P_ratio",
    "PEG * Helper * flow rate",
    "PEG * Ionizable * Ionizable Lipid Type",
    "PEG * Ionizable * N_P_ratio",
    "PEG * Ionizable * flow rate",
    "PEG * Cholesterol * Ionizable Lipid Type",
    "PEG * Cholesterol * N_P_ratio",
    "PEG * Cholesterol * flow rate",
    "PEG * Ionizable Lipid Type * N_P_ratio",
    "PEG * Ionizable Lipid Type * flow rate",
    "PEG * N_P_ratio * flow rate",
    "Helper * Ionizable * Ionizable Lipid Type",
    "Helper * Ionizable * N_P_ratio",
    "Helper * Ionizable * flow rate",
    "Helper * Cholesterol * Ionizable Lipid Type",
    "Helper * Cholesterol * N_P_ratio",
    "Helper * Cholesterol * flow rate",
    "Helper * Ionizable Lipid Type * N_P_ratio",
    "Helper * Ionizable Lipid Type * flow rate",
    "Helper * N_P_ratio * flow rate",
    "Ionizable * Cholesterol * Ionizable Lipid Type",
    "Ionizable * Cholesterol * N_P_ratio",
    "Ionizable * Cholesterol * flow rate",
    "Ionizable * Ionizable Lipid Type * N_P_ratio",
    "Ionizable * Ionizable Lipid Type * flow rate",
    "Ionizable * N_P_ratio * flow rate",
    "Cholesterol * Ionizable Lipid Type * N_P_ratio",
    "Cholesterol * Ionizable Lipid Type * flow rate",
    "Cholesterol * N_P_ratio * flow rate",
    "Ionizable Lipid Type * N_P_ratio * flow rate"
  ]
}
)json";

Eigen::Index column_of(const FactorTable& t, std::string_view name) {
  for (std::size_t j = 0; j < t.names.size(); ++j)
    if (t.names[j] == name) return static_cast<Eigen::Index>(j);
  return -1;
}

}  // namespace

std::string_view lnp_study_config_text() { return kConfig; }

StudyConfig lnp_study_config() { return parse_study_config(kConfig); }

LnpDataset simulate_lnp_dataset(std::uint64_t seed, Eigen::Index n_runs) {
  const StudyConfig cfg = lnp_study_config();
  LnpDataset data;
  data.factors = sample_points(cfg.factors, n_runs, derive_seed(seed, {stream::kDesign}));
  data.response_names = {"Potency", "Size", "PDI"};
  data.responses.resize(n_runs, 3);

  const auto& v = data.factors.values;
  const auto spec_of = [&](std::string_view name) -> const FactorSpec& {
    return cfg.factors[static_cast<std::size_t>(column_of(data.factors, name))];
  };
  const Eigen::Index helper = column_of(data.factors, "Helper");
  const Eigen::Index ionizable = column_of(data.factors, "Ionizable");
  const Eigen::Index type = column_of(data.factors, "Ionizable Lipid Type");
  const Eigen::Index np = column_of(data.factors, "N_P_ratio");
  const Eigen::Index flow = column_of(data.factors, "flow rate");

  Rng rng(derive_seed(seed, {stream::kResponse}));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < n_runs; ++i) {
    const double c_np = code_continuous(spec_of("N_P_ratio"), v(i, np));
    const double c_fl = code_continuous(spec_of("flow rate"), v(i, flow));
    const double type_effect = 1.0 - v(i, type);  // +1, 0, -1
    data.responses(i, 0) = 8.0 + 1.5 * c_np - 1.0 * c_np * c_np + 6.0 * v(i, ionizable) +
                           0.8 * type_effect + 0.8 * c_np * c_fl + 0.3 * normal(rng);
    data.responses(i, 1) =
        90.0 + 12.0 * c_np + 8.0 * c_fl + 40.0 * v(i, helper) + 2.0 * normal(rng);
    data.responses(i, 2) = 0.2 + 0.03 * normal(rng);
  }
  return data;
}

}  // namespace svem
