#include "svem/factor_model.hpp"

#include "svem/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace svem {

namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// ":PEG & Mixture" -> "PEG"
std::string clean_factor_name(std::string_view raw) {
  std::string s = trim(raw);
  if (auto amp = s.find('&'); amp != std::string::npos) s = trim(s.substr(0, amp));
  if (!s.empty() && s.front() == ':') s = trim(s.substr(1));
  return s;
}

FactorRole parse_role(const std::string& role, const std::string& factor) {
  std::string r = lower(role);
  if (r == "mixture") return FactorRole::mixture;
  if (r == "continuous") return FactorRole::continuous;
  if (r == "categorical") return FactorRole::categorical;
  throw SchemaError("factor '" + factor + "': unknown role '" + role + "'");
}

std::vector<FactorSpec> factors_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("factors") || !doc["factors"].is_array())
    throw SchemaError("configuration must be an object with a 'factors' array");
  std::vector<FactorSpec> specs;
  for (const auto& f : doc["factors"]) {
    if (!f.is_object() || !f.contains("name") || !f["name"].is_string())
      throw SchemaError("every factor needs a string 'name'");
    FactorSpec spec;
    spec.name = trim(f["name"].get<std::string>());
    if (spec.name.empty()) throw SchemaError("factor name must not be empty");
    if (!f.contains("role") || !f["role"].is_string())
      throw SchemaError("factor '" + spec.name + "': missing 'role'");
    spec.role = parse_role(f["role"].get<std::string>(), spec.name);
    if (spec.role == FactorRole::categorical) {
      if (!f.contains("levels") || !f["levels"].is_array())
        throw SchemaError("factor '" + spec.name + "': categorical factor needs 'levels'");
      for (const auto& l : f["levels"]) {
        if (l.is_string())
          spec.levels.push_back(l.get<std::string>());
        else if (l.is_number())
          spec.levels.push_back(l.dump());
        else
          throw SchemaError("factor '" + spec.name + "': levels must be strings");
      }
    } else {
      const auto& r = f.contains("range") ? f["range"] : json();
      if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
        throw SchemaError("factor '" + spec.name + "': 'range' must be [low, high]");
      spec.low = r[0].get<double>();
      spec.high = r[1].get<double>();
    }
    specs.push_back(std::move(spec));
  }
  validate_factor_specs(specs);
  return specs;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("configuration is not valid JSON: ") + e.what());
  }
}

const FactorSpec* find_spec(std::span<const FactorSpec> specs, const std::string& name) {
  for (const auto& s : specs)
    if (s.name == name) return &s;
  return nullptr;
}

// Expansion plan for one term: numeric factors, categorical factors, column
// count.
struct TermPlan {
  struct Numeric {
    Eigen::Index column;
    int exponent;
    bool coded;
  };
  std::vector<Numeric> numeric;
  std::vector<Eigen::Index> categorical;  // table columns
  std::vector<int> categorical_levels;
  bool scheffe = false;
  Eigen::Index scheffe_a = 0;
  Eigen::Index scheffe_b = 0;
  Eigen::Index width = 1;
};

TermPlan plan_term(std::span<const FactorSpec> specs, const Term& term) {
  TermPlan plan;
  auto index_of = [&](const std::string& name) -> Eigen::Index {
    for (std::size_t i = 0; i < specs.size(); ++i)
      if (specs[i].name == name) return static_cast<Eigen::Index>(i);
    throw SchemaError("term '" + term.label() + "' references unknown factor '" + name + "'");
  };
  if (term.kind == TermKind::scheffe_cubic) {
    plan.scheffe = true;
    plan.scheffe_a = index_of(term.factors.at(0).factor);
    plan.scheffe_b = index_of(term.factors.at(1).factor);
    return plan;
  }
  for (const auto& tf : term.factors) {
    Eigen::Index idx = index_of(tf.factor);
    const FactorSpec& spec = specs[static_cast<std::size_t>(idx)];
    if (spec.role == FactorRole::categorical) {
      plan.categorical.push_back(idx);
      int levels = static_cast<int>(spec.levels.size());
      plan.categorical_levels.push_back(levels);
      plan.width *= levels - 1;
    } else {
      plan.numeric.push_back({idx, tf.exponent, spec.role == FactorRole::continuous});
    }
  }
  return plan;
}

}  // namespace

std::string_view to_string(FactorRole role) {
  switch (role) {
    case FactorRole::mixture:
      return "mixture";
    case FactorRole::continuous:
      return "continuous";
    case FactorRole::categorical:
      return "categorical";
  }
  return "unknown";
}

std::string Term::label() const {
  if (kind == TermKind::intercept) return "(Intercept)";
  if (kind == TermKind::scheffe_cubic)
    return "ScheffeCubic(" + factors.at(0).factor + "," + factors.at(1).factor + ")";
  std::string out;
  for (const auto& f : factors) {
    for (int e = 0; e < f.exponent; ++e) {
      if (!out.empty()) out += '*';
      out += f.factor;
    }
  }
  return out;
}

Term Term::main(std::string factor) {
  Term t;
  t.kind = TermKind::main;
  t.factors.push_back({std::move(factor), 1});
  return t;
}

Term Term::product(const std::vector<std::string>& names) {
  Term t;
  for (const auto& n : names) {
    auto it = std::find_if(t.factors.begin(), t.factors.end(),
                           [&](const TermFactor& f) { return f.factor == n; });
    if (it == t.factors.end())
      t.factors.push_back({n, 1});
    else
      ++it->exponent;
  }
  bool power = std::any_of(t.factors.begin(), t.factors.end(),
                           [](const TermFactor& f) { return f.exponent > 1; });
  if (t.factors.empty())
    t.kind = TermKind::intercept;
  else if (power)
    t.kind = TermKind::power;
  else if (t.factors.size() == 1)
    t.kind = TermKind::main;
  else
    t.kind = TermKind::interaction;
  return t;
}

Term Term::scheffe_cubic(std::string a, std::string b) {
  Term t;
  t.kind = TermKind::scheffe_cubic;
  t.factors.push_back({std::move(a), 1});
  t.factors.push_back({std::move(b), 1});
  return t;
}

Term parse_term(std::string_view text) {
  std::string s = trim(text);
  if (s.empty()) throw SchemaError("empty term");
  std::string ls = lower(s);
  if (ls == "(intercept)" || ls == "intercept") return Term::intercept();
  if (ls.rfind("scheffe cubic", 0) == 0 || ls.rfind("scheffecubic", 0) == 0) {
    auto open = s.find('(');
    auto close = s.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      throw SchemaError("malformed Scheffe cubic term '" + s + "'");
    std::string inner = s.substr(open + 1, close - open - 1);
    auto comma = inner.find(',');
    if (comma == std::string::npos || inner.find(',', comma + 1) != std::string::npos)
      throw SchemaError("Scheffe cubic term '" + s + "' must name exactly two factors");
    std::string a = clean_factor_name(inner.substr(0, comma));
    std::string b = clean_factor_name(inner.substr(comma + 1));
    if (a.empty() || b.empty()) throw SchemaError("malformed Scheffe cubic term '" + s + "'");
    return Term::scheffe_cubic(a, b);
  }
  std::vector<std::string> names;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t star = s.find('*', start);
    std::string part = clean_factor_name(
        std::string_view(s).substr(start, star == std::string::npos ? std::string::npos
                                                                   : star - start));
    if (part.empty()) throw SchemaError("malformed term '" + s + "'");
    names.push_back(part);
    if (star == std::string::npos) break;
    start = star + 1;
  }
  return Term::product(names);
}

void validate_factor_specs(std::span<const FactorSpec> specs) {
  if (specs.empty()) throw SchemaError("no factors declared");
  std::set<std::string> seen;
  double mix_low = 0.0;
  double mix_high = 0.0;
  bool any_mixture = false;
  for (const auto& s : specs) {
    if (!seen.insert(s.name).second) throw SchemaError("duplicate factor name '" + s.name + "'");
    if (s.role == FactorRole::categorical) {
      if (s.levels.empty()) throw SchemaError("factor '" + s.name + "': empty level list");
      std::set<std::string> lv(s.levels.begin(), s.levels.end());
      if (lv.size() != s.levels.size())
        throw SchemaError("factor '" + s.name + "': duplicate levels");
      if (lv.size() < 2) throw SchemaError("factor '" + s.name + "': needs at least 2 levels");
      continue;
    }
    if (!std::isfinite(s.low) || !std::isfinite(s.high))
      throw SchemaError("factor '" + s.name + "': range must be finite");
    if (!(s.low < s.high)) throw SchemaError("factor '" + s.name + "': inverted range");
    if (s.role == FactorRole::mixture) {
      if (s.low < 0.0) throw SchemaError("factor '" + s.name + "': mixture lower bound < 0");
      any_mixture = true;
      mix_low += s.low;
      mix_high += s.high;
    }
  }
  constexpr double tol = 1e-12;
  if (any_mixture && (mix_low > 1.0 + tol || mix_high < 1.0 - tol)) {
    std::ostringstream os;
    os << "mixture bounds admit no point on the simplex (sum of lows " << mix_low
       << ", sum of highs " << mix_high << ")";
    throw SchemaError(os.str());
  }
}

void validate_terms(std::span<const FactorSpec> specs, std::span<const Term> terms) {
  for (const auto& t : terms) {
    for (const auto& tf : t.factors) {
      const FactorSpec* spec = find_spec(specs, tf.factor);
      if (!spec)
        throw SchemaError("term '" + t.label() + "' references unknown factor '" + tf.factor + "'");
      if (tf.exponent < 1) throw SchemaError("term '" + t.label() + "': exponent must be >= 1");
      if (tf.exponent > 1 && spec->role != FactorRole::continuous)
        throw SchemaError("term '" + t.label() + "': powers are only allowed on continuous factors");
      if (t.kind == TermKind::scheffe_cubic && spec->role != FactorRole::mixture)
        throw SchemaError("term '" + t.label() + "': Scheffe cubic needs mixture factors");
    }
    if (t.kind == TermKind::scheffe_cubic &&
        (t.factors.size() != 2 || t.factors[0].factor == t.factors[1].factor))
      throw SchemaError("term '" + t.label() + "': Scheffe cubic needs two distinct factors");
  }
}

std::vector<FactorSpec> parse_factor_spec(std::string_view config_text) {
  return factors_from_json(parse_json(config_text));
}

StudyConfig parse_study_config(std::string_view config_text) {
  json doc = parse_json(config_text);
  StudyConfig cfg;
  cfg.factors = factors_from_json(doc);
  if (!doc.contains("terms") || !doc["terms"].is_array())
    throw SchemaError("configuration needs a 'terms' array");
  for (const auto& t : doc["terms"]) {
    if (!t.is_string()) throw SchemaError("terms must be strings");
    cfg.terms.push_back(parse_term(t.get<std::string>()));
  }
  validate_terms(cfg.factors, cfg.terms);
  return cfg;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open configuration '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_study_config(buf.str());
}

FactorTable make_factor_table(std::span<const FactorSpec> specs, Eigen::MatrixXd values) {
  if (values.cols() != static_cast<Eigen::Index>(specs.size()))
    throw DomainError("factor table has " + std::to_string(values.cols()) + " columns, expected " +
                      std::to_string(specs.size()));
  FactorTable t;
  for (const auto& s : specs) t.names.push_back(s.name);
  t.values = std::move(values);
  return t;
}

Eigen::Index expanded_column_count(std::span<const FactorSpec> specs,
                                   std::span<const Term> terms) {
  validate_terms(specs, terms);
  Eigen::Index total = 0;
  for (const auto& t : terms) total += plan_term(specs, t).width;
  return total;
}

std::vector<std::string> expanded_column_labels(std::span<const FactorSpec> specs,
                                                std::span<const Term> terms) {
  validate_terms(specs, terms);
  std::vector<std::string> labels;
  for (const auto& t : terms) {
    TermPlan plan = plan_term(specs, t);
    if (plan.categorical.empty()) {
      labels.push_back(t.label());
      continue;
    }
    for (Eigen::Index c = 0; c < plan.width; ++c) {
      std::string suffix;
      Eigen::Index rem = c;
      for (std::size_t k = 0; k < plan.categorical.size(); ++k) {
        int coded = plan.categorical_levels[k] - 1;
        int level = static_cast<int>(rem % coded);
        rem /= coded;
        const FactorSpec& spec = specs[static_cast<std::size_t>(plan.categorical[k])];
        suffix += "[" + spec.levels[static_cast<std::size_t>(level)] + "]";
      }
      labels.push_back(t.label() + suffix);
    }
  }
  return labels;
}

ModelMatrix expand_terms(std::span<const FactorSpec> specs, std::span<const Term> terms,
                         const FactorTable& rows) {
  validate_terms(specs, terms);
  if (rows.values.cols() != static_cast<Eigen::Index>(specs.size()))
    throw DomainError("factor table column count does not match the factor list");
  for (std::size_t j = 0; j < specs.size(); ++j) {
    if (j < rows.names.size() && rows.names[j] != specs[j].name)
      throw DomainError("factor table column " + std::to_string(j) + " is '" + rows.names[j] +
                        "', expected '" + specs[j].name + "'");
  }

  const Eigen::Index n = rows.values.rows();
  // Validate and code every factor column once.
  Eigen::MatrixXd coded(n, static_cast<Eigen::Index>(specs.size()));
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const FactorSpec& spec = specs[j];
    const auto col = static_cast<Eigen::Index>(j);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = rows.values(i, col);
      if (spec.role == FactorRole::categorical) {
        double r = std::round(v);
        if (!std::isfinite(v) || r != v || r < 0 ||
            r >= static_cast<double>(spec.levels.size())) {
          std::ostringstream os;
          os << "row " << i << ", factor '" << spec.name << "': unknown level index " << v;
          throw DomainError(os.str());
        }
        coded(i, col) = r;
        continue;
      }
      double tol = 1e-9 * (spec.high - spec.low);
      if (!std::isfinite(v) || v < spec.low - tol || v > spec.high + tol) {
        std::ostringstream os;
        os << "row " << i << ", factor '" << spec.name << "': value " << v << " outside ["
           << spec.low << ", " << spec.high << "]";
        throw DomainError(os.str());
      }
      coded(i, col) = spec.role == FactorRole::continuous ? code_continuous(spec, v) : v;
    }
  }

  ModelMatrix mm;
  mm.columns = expanded_column_labels(specs, terms);
  mm.values.resize(n, static_cast<Eigen::Index>(mm.columns.size()));
  Eigen::Index out = 0;
  for (const auto& t : terms) {
    TermPlan plan = plan_term(specs, t);
    if (t.kind == TermKind::intercept && !mm.intercept_column) mm.intercept_column = out;
    if (plan.scheffe) {
      auto a = coded.col(plan.scheffe_a).array();
      auto b = coded.col(plan.scheffe_b).array();
      mm.values.col(out++) = a * b * (a - b);
      continue;
    }
    Eigen::ArrayXd numeric = Eigen::ArrayXd::Ones(n);
    for (const auto& f : plan.numeric) {
      auto x = coded.col(f.column).array();
      for (int e = 0; e < f.exponent; ++e) numeric *= x;
    }
    for (Eigen::Index c = 0; c < plan.width; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double v = numeric(i);
        Eigen::Index rem = c;
        for (std::size_t k = 0; k < plan.categorical.size() && v != 0.0; ++k) {
          int coded_cols = plan.categorical_levels[k] - 1;
          int target = static_cast<int>(rem % coded_cols);
          rem /= coded_cols;
          int level = static_cast<int>(coded(i, plan.categorical[k]));
          // Sum-to-zero effects coding: the last level is the reference -1 row.
          if (level == target)
            continue;
          else if (level == plan.categorical_levels[k] - 1)
            v = -v;
          else
            v = 0.0;
        }
        mm.values(i, out + c) = v;
      }
    }
    out += plan.width;
  }
  return mm;
}

}  // namespace svem
