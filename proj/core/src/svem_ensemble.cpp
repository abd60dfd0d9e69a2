#include "svem/svem_ensemble.hpp"

#include "svem/errors.hpp"
#include "svem/parallel.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <ostream>

namespace svem {

std::string_view to_string(Learner learner) {
  return learner == Learner::lasso ? "lasso" : "forward_selection";
}

Learner parse_learner(std::string_view text) {
  if (text == "fs" || text == "forward_selection" || text == "forward-selection")
    return Learner::forward_selection;
  if (text == "lasso") return Learner::lasso;
  throw DomainError("unknown learner '" + std::string(text) + "' (expected fs or lasso)");
}

FitResult MemberFitter::fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            const WeightPair& weights, Eigen::Index intercept_column) {
  if (learner_ == Learner::lasso) return lasso_.fit(X, y, weights, intercept_column);
  return fs_.fit(X, y, weights, intercept_column);
}

namespace {

void check_inputs(const ModelMatrix& X, const Eigen::VectorXd& y, int n_boot) {
  if (!X.intercept_column)
    throw DomainError("candidate terms must include the intercept");
  if (y.size() != X.rows())
    throw DomainError("response has " + std::to_string(y.size()) + " rows, design has " +
                      std::to_string(X.rows()));
  if (X.rows() < 1) throw InsufficientDataError("no rows to fit");
  if (!y.allFinite()) throw DomainError("response contains missing or non-finite values");
  if (n_boot < 1) throw DomainError("nBoot must be >= 1");
}

FitResult fit_one(MemberFitter& fitter, const ModelMatrix& X, const Eigen::VectorXd& y,
                  std::uint64_t seed, int b) {
  WeightPair w = draw_weight_pair(X.rows(), seed, static_cast<std::uint64_t>(b));
  try {
    return fitter.fit(X.values, y, w, *X.intercept_column);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError("member " + std::to_string(b) + ": " + e.what(), e.index());
  } catch (const SingularSystemError& e) {
    throw SingularSystemError("member " + std::to_string(b) + ": " + e.what());
  }
}

}  // namespace

void fit_members(MemberFitter& fitter, const ModelMatrix& X, const Eigen::VectorXd& y,
                 int n_boot, std::uint64_t seed, std::vector<FitResult>& out) {
  check_inputs(X, y, n_boot);
  out.resize(static_cast<std::size_t>(n_boot));
  for (int b = 0; b < n_boot; ++b) out[static_cast<std::size_t>(b)] = fit_one(fitter, X, y, seed, b);
}

EnsembleModel svem_fit(const ModelMatrix& X, const Eigen::VectorXd& y,
                       std::span<const FactorSpec> specs, std::span<const Term> terms,
                       Learner learner, int n_boot, std::uint64_t seed, unsigned threads) {
  check_inputs(X, y, n_boot);
  EnsembleModel model;
  model.specs.assign(specs.begin(), specs.end());
  model.terms.assign(terms.begin(), terms.end());
  model.columns = X.columns;
  model.intercept_column = *X.intercept_column;
  model.learner = learner;
  model.seed = seed;
  model.members.resize(static_cast<std::size_t>(n_boot));

  threads = resolve_threads(threads);
  std::vector<MemberFitter> fitters(threads, MemberFitter(learner));
  parallel_for(static_cast<std::size_t>(n_boot), threads, [&](unsigned worker, std::size_t b) {
    model.members[b] = fit_one(fitters[worker], X, y, seed, static_cast<int>(b));
  });
  return model;
}

EnsembleModel svem_fit(const FactorTable& x_rows, const Eigen::VectorXd& y,
                       std::span<const FactorSpec> specs, std::span<const Term> terms,
                       Learner learner, int n_boot, std::uint64_t seed, unsigned threads) {
  ModelMatrix X = expand_terms(specs, terms, x_rows);
  return svem_fit(X, y, specs, terms, learner, n_boot, seed, threads);
}

void predict_members(std::span<const FitResult> members, const ModelMatrix& T,
                     Eigen::MatrixXd& P) {
  const Eigen::Index rows = T.rows();
  P.resize(rows, static_cast<Eigen::Index>(members.size()));
  for (std::size_t b = 0; b < members.size(); ++b) {
    const FitResult& m = members[b];
    if (m.coefficients.size() != T.cols())
      throw DomainError("member coefficient count does not match the candidate columns");
    auto col = P.col(static_cast<Eigen::Index>(b));
    col.setConstant(m.intercept);
    for (Eigen::Index j = 0; j < m.coefficients.size(); ++j) {
      const double c = m.coefficients(j);
      if (c != 0.0) col.noalias() += T.values.col(j) * c;
    }
  }
}

PredictionSummary summarize_predictions(Eigen::MatrixXd P) {
  PredictionSummary s;
  const Eigen::Index boots = P.cols();
  s.f_hat = P.rowwise().mean();
  if (boots > 1) {
    s.s_hat = ((P.colwise() - s.f_hat).array().square().rowwise().sum() /
               static_cast<double>(boots - 1))
                  .sqrt();
  } else {
    s.s_hat = Eigen::VectorXd::Zero(P.rows());
  }
  s.P = std::move(P);
  return s;
}

PredictionSummary svem_predict(const EnsembleModel& model, const ModelMatrix& T) {
  if (T.cols() != static_cast<Eigen::Index>(model.columns.size()))
    throw DomainError("evaluation matrix does not match the model's candidate columns");
  Eigen::MatrixXd P;
  predict_members(model.members, T, P);
  return summarize_predictions(std::move(P));
}

PredictionSummary svem_predict(const EnsembleModel& model, const FactorTable& T) {
  return svem_predict(model, expand_terms(model.specs, model.terms, T));
}

void write_model_dump(const EnsembleModel& model, std::ostream& out) {
  fmt::print(out, "# svem ensemble model\n");
  fmt::print(out, "learner: {}\n", to_string(model.learner));
  fmt::print(out, "seed: {}\n", model.seed);
  fmt::print(out, "n_boot: {}\n", model.members.size());
  fmt::print(out, "n_columns: {}\n", model.columns.size());
  for (std::size_t j = 0; j < model.columns.size(); ++j)
    fmt::print(out, "column {}: {}\n", j, model.columns[j]);
  for (std::size_t b = 0; b < model.members.size(); ++b) {
    const FitResult& m = model.members[b];
    fmt::print(out, "member {} tuning {} intercept {:.17g} coefficients", b, m.tuning_index,
               m.intercept);
    for (Eigen::Index j = 0; j < m.coefficients.size(); ++j)
      fmt::print(out, " {:.17g}", m.coefficients(j));
    fmt::print(out, "\n");
  }
}

}  // namespace svem
