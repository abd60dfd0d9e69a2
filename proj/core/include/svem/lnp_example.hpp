#pragma once

#include "svem/factor_model.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace svem {

// Lipid nanoparticle mixture-process study: four mixture lipids, the
// ionizable lipid type (3 levels), N/P ratio and flow rate, with a 76-term
// candidate list that expands to 100 model-matrix columns.
std::string_view lnp_study_config_text();
StudyConfig lnp_study_config();

struct LnpDataset {
  FactorTable factors;
  std::vector<std::string> response_names;  // Potency, Size, PDI
  Eigen::MatrixXd responses;                // one column per response
};

// Synthetic experiment over the LNP study region. Potency carries a moderate
// factor signal, Size a strong one, PDI is pure noise.
LnpDataset simulate_lnp_dataset(std::uint64_t seed, Eigen::Index n_runs = 23);

}  // namespace svem
