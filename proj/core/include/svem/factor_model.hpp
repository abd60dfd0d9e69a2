#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace svem {

enum class FactorRole { mixture, continuous, categorical };

std::string_view to_string(FactorRole role);

struct FactorSpec {
  std::string name;
  FactorRole role = FactorRole::continuous;
  // Used by mixture and continuous factors.
  double low = 0.0;
  double high = 1.0;
  // Used by categorical factors, in declared order.
  std::vector<std::string> levels;

  bool ranged() const { return role != FactorRole::categorical; }
};

enum class TermKind { intercept, main, interaction, power, scheffe_cubic };

struct TermFactor {
  std::string factor;
  int exponent = 1;
};

struct Term {
  TermKind kind = TermKind::intercept;
  std::vector<TermFactor> factors;

  std::string label() const;

  static Term intercept() { return {}; }
  static Term main(std::string factor);
  // Product of the named factors; repeated names raise the exponent.
  static Term product(const std::vector<std::string>& factors);
  static Term scheffe_cubic(std::string a, std::string b);
};

// Factors plus candidate terms as read from a study configuration file.
struct StudyConfig {
  std::vector<FactorSpec> factors;
  std::vector<Term> terms;
};

// Parses the factor list of a study configuration (JSON, see README).
// Throws SchemaError naming the offending factor.
std::vector<FactorSpec> parse_factor_spec(std::string_view config_text);

// Parses factors and terms.
StudyConfig parse_study_config(std::string_view config_text);

StudyConfig load_study_config(const std::string& path);

// Parses one term in the product notation used by the configuration, e.g.
// "(Intercept)", "PEG", ":PEG * :Helper", "N_P_ratio * N_P_ratio",
// "Scheffe Cubic( :PEG, :Helper )". "& Mixture" / "& RS" suffixes are accepted
// and ignored.
Term parse_term(std::string_view text);

// Checks the FactorSpec invariants for a whole study; throws SchemaError.
void validate_factor_specs(std::span<const FactorSpec> specs);

// Checks that each term references declared factors with legal roles.
void validate_terms(std::span<const FactorSpec> specs, std::span<const Term> terms);

// Factor settings, one column per factor in spec order. Mixture and
// continuous columns hold native-scale values; categorical columns hold the
// zero-based level index.
struct FactorTable {
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  Eigen::Index rows() const { return values.rows(); }
};

FactorTable make_factor_table(std::span<const FactorSpec> specs, Eigen::MatrixXd values);

struct ModelMatrix {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
  std::optional<Eigen::Index> intercept_column;
  // Continuous factors enter the expansion coded to [-1, 1] from their
  // declared range; mixture proportions enter unscaled.
  bool continuous_coded = true;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Number of model-matrix columns the terms expand to. A categorical factor
// with L levels contributes L-1 effects-coded columns per mention.
Eigen::Index expanded_column_count(std::span<const FactorSpec> specs,
                                   std::span<const Term> terms);

std::vector<std::string> expanded_column_labels(std::span<const FactorSpec> specs,
                                                std::span<const Term> terms);

// Expands factor settings into model-matrix rows. Throws DomainError for an
// out-of-range value or unknown level (naming row and factor) and
// SchemaError for a term referencing an unknown factor.
ModelMatrix expand_terms(std::span<const FactorSpec> specs, std::span<const Term> terms,
                         const FactorTable& rows);

// Coded value of a continuous factor: maps [low, high] onto [-1, 1].
inline double code_continuous(const FactorSpec& spec, double x) {
  return (2.0 * x - (spec.low + spec.high)) / (spec.high - spec.low);
}

}  // namespace svem
