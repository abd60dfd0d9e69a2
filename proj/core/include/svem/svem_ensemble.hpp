#pragma once

#include "svem/base_learners.hpp"
#include "svem/factor_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace svem {

enum class Learner { forward_selection, lasso };

std::string_view to_string(Learner learner);
// Accepts "fs", "forward_selection", "lasso".
Learner parse_learner(std::string_view text);

// nBoot fitted members sharing one candidate matrix. Immutable once built.
struct EnsembleModel {
  std::vector<FactorSpec> specs;
  std::vector<Term> terms;
  std::vector<std::string> columns;
  Eigen::Index intercept_column = 0;
  Learner learner = Learner::forward_selection;
  std::uint64_t seed = 0;
  std::vector<FitResult> members;

  int n_boot() const { return static_cast<int>(members.size()); }
};

// P (nrow(T) x nBoot), its row means and row standard deviations
// (divisor nBoot - 1; zero when nBoot == 1).
struct PredictionSummary {
  Eigen::MatrixXd P;
  Eigen::VectorXd f_hat;
  Eigen::VectorXd s_hat;
};

// Fits one base model per weight pair; keeps learner buffers alive across
// calls. Not thread-safe: use one per worker.
class MemberFitter {
 public:
  MemberFitter(Learner learner, LassoOptions lasso = {}) : learner_(learner), lasso_(lasso) {}

  FitResult fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                const Eigen::Ref<const Eigen::VectorXd>& y, const WeightPair& weights,
                Eigen::Index intercept_column);

  Learner learner() const { return learner_; }

 private:
  Learner learner_;
  ForwardSelection fs_;
  LassoPath lasso_;
};

// Member b is trained under draw_weight_pair(n, seed, b). Learner errors are
// rethrown with the member index. Members run in parallel when threads > 1;
// the result does not depend on the thread count.
EnsembleModel svem_fit(const ModelMatrix& X, const Eigen::VectorXd& y,
                       std::span<const FactorSpec> specs, std::span<const Term> terms,
                       Learner learner, int n_boot, std::uint64_t seed, unsigned threads = 1);

EnsembleModel svem_fit(const FactorTable& x_rows, const Eigen::VectorXd& y,
                       std::span<const FactorSpec> specs, std::span<const Term> terms,
                       Learner learner, int n_boot, std::uint64_t seed, unsigned threads = 1);

// Fits members into `out` (resized to n_boot) with a caller-owned fitter.
void fit_members(MemberFitter& fitter, const ModelMatrix& X, const Eigen::VectorXd& y,
                 int n_boot, std::uint64_t seed, std::vector<FitResult>& out);

// P = intercepts + T * coefficients, accumulated over nonzero coefficients.
void predict_members(std::span<const FitResult> members, const ModelMatrix& T,
                     Eigen::MatrixXd& P);

PredictionSummary summarize_predictions(Eigen::MatrixXd P);

PredictionSummary svem_predict(const EnsembleModel& model, const FactorTable& T);
PredictionSummary svem_predict(const EnsembleModel& model, const ModelMatrix& T);

// Plain-text audit dump: header, column labels, one line per member.
void write_model_dump(const EnsembleModel& model, std::ostream& out);

}  // namespace svem
