#include "svem/report.hpp"

#include "svem/errors.hpp"
#include "svem/rng.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace svem {
namespace {

using Json = nlohmann::ordered_json;

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw IngestionError("unterminated quoted field");
  if (any || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool is_missing(const std::string& cell) {
  std::string l;
  for (char c : cell) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return l.empty() || l == "na" || l == "nan" || l == ".";
}

std::optional<double> parse_double(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

Json settings_json(const TestSettings& s) {
  Json j;
  j["nPerm"] = s.n_perm;
  j["nPoint"] = s.n_point;
  j["nBoot"] = s.n_boot;
  j["percent"] = s.percent;
  j["nSVEM"] = s.n_svem;
  j["reference_family"] = std::string(to_string(s.reference_family));
  j["seed"] = s.seed;
  return j;
}

Json reference_json(const FittedReference& r) {
  Json j;
  j["family"] = std::string(to_string(r.family));
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ShashParams>) {
          j["location"] = p.location;
          j["scale"] = p.scale;
          j["skewness"] = p.skewness;
          j["tailweight"] = p.tailweight;
        } else {
          j["shape"] = p.shape;
          j["scale"] = p.scale;
        }
      },
      r.params);
  return j;
}

}  // namespace

Dataset parse_dataset(std::string_view csv_text, std::span<const FactorSpec> specs,
                      std::span<const std::string> responses) {
  validate_factor_specs(specs);
  const auto rows = parse_csv(csv_text);
  if (rows.empty()) throw IngestionError("dataset is empty (no header row)");
  const auto& header = rows.front();
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index.emplace(trim(header[j]), j);
  const auto column = [&](const std::string& name) {
    const auto it = index.find(name);
    if (it == index.end()) throw IngestionError("column '" + name + "' not found in header");
    return it->second;
  };
  std::vector<std::size_t> factor_cols;
  for (const auto& s : specs) factor_cols.push_back(column(s.name));
  std::vector<std::size_t> response_cols;
  for (const auto& r : responses) response_cols.push_back(column(r));

  const std::size_t n_data = rows.size() - 1;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n_data), static_cast<Eigen::Index>(specs.size()));
  std::vector<char> keep(n_data, 1);
  Eigen::MatrixXd resp(static_cast<Eigen::Index>(n_data), static_cast<Eigen::Index>(responses.size()));
  std::vector<std::vector<char>> present(responses.size(), std::vector<char>(n_data, 1));

  const auto cell_of = [&](std::size_t r, std::size_t c) -> std::string {
    const auto& row = rows[r + 1];
    return c < row.size() ? trim(row[c]) : std::string();
  };
  const auto fail = [&](std::size_t r, const std::string& col, const std::string& what) {
    return IngestionError(fmt::format("row {}, column '{}': {}", r + 1, col, what));
  };

  for (std::size_t r = 0; r < n_data; ++r) {
    if (rows[r + 1].size() > header.size())
      throw IngestionError(fmt::format("row {}: {} fields, header has {}", r + 1,
                                       rows[r + 1].size(), header.size()));
    for (std::size_t f = 0; f < specs.size(); ++f) {
      const std::string cell = cell_of(r, factor_cols[f]);
      if (is_missing(cell)) {
        keep[r] = 0;
        continue;
      }
      const auto& spec = specs[f];
      double v = 0.0;
      if (spec.role == FactorRole::categorical) {
        const auto it = std::find(spec.levels.begin(), spec.levels.end(), cell);
        if (it == spec.levels.end()) throw fail(r, spec.name, "unknown level '" + cell + "'");
        v = static_cast<double>(it - spec.levels.begin());
      } else {
        const auto parsed = parse_double(cell);
        if (!parsed) throw fail(r, spec.name, "cannot parse '" + cell + "' as a number");
        v = *parsed;
      }
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = v;
    }
    for (std::size_t k = 0; k < responses.size(); ++k) {
      const std::string cell = cell_of(r, response_cols[k]);
      if (is_missing(cell)) {
        present[k][r] = 0;
        continue;
      }
      const auto parsed = parse_double(cell);
      if (!parsed) throw fail(r, responses[k], "cannot parse '" + cell + "' as a number");
      resp(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = *parsed;
    }
  }

  Dataset data;
  data.rows_read = n_data;
  std::vector<Eigen::Index> kept;
  for (std::size_t r = 0; r < n_data; ++r)
    if (keep[r]) kept.push_back(static_cast<Eigen::Index>(r));
  data.rows_dropped = n_data - kept.size();
  if (kept.empty())
    throw IngestionError(n_data == 0 ? "dataset has no data rows"
                                     : "no rows remain after dropping missing factor values");
  if (data.rows_dropped > 0)
    spdlog::info("dropped {} of {} rows with missing factor values", data.rows_dropped, n_data);

  Eigen::MatrixXd kept_values(static_cast<Eigen::Index>(kept.size()), values.cols());
  for (std::size_t i = 0; i < kept.size(); ++i)
    kept_values.row(static_cast<Eigen::Index>(i)) = values.row(kept[i]);
  data.factors = make_factor_table(specs, std::move(kept_values));
  // Range and level checks with row context.
  expand_terms(specs, std::vector<Term>{Term::intercept()}, data.factors);

  for (std::size_t k = 0; k < responses.size(); ++k) {
    ResponseData rd;
    rd.name = responses[k];
    std::vector<double> y;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (!present[k][static_cast<std::size_t>(kept[i])]) continue;
      rd.rows.push_back(static_cast<Eigen::Index>(i));
      y.push_back(resp(kept[i], static_cast<Eigen::Index>(k)));
    }
    const std::size_t missing = kept.size() - y.size();
    if (missing > 0)
      spdlog::info("response '{}': dropped {} rows with missing values", rd.name, missing);
    if (y.empty()) throw IngestionError("response '" + rd.name + "' has no usable rows");
    rd.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    data.responses.push_back(std::move(rd));
  }
  return data;
}

Dataset ingest_dataset(const std::filesystem::path& path, std::span<const FactorSpec> specs,
                       std::span<const std::string> responses) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open dataset '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), specs, responses);
}

std::string format_number(double x) { return fmt::format("{}", x); }

std::string format_p_value(double p) {
  std::string s = p < 1e-4 ? "<.0001" : fmt::format("{:.4f}", p);
  if (p < 0.05) s += '*';
  return s;
}

void write_factor_csv(std::ostream& out, std::span<const FactorSpec> specs, const FactorTable& t,
                      std::span<const std::string> extra_names, const Eigen::MatrixXd* extra) {
  std::string line;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    if (j) line += ',';
    line += csv_field(specs[j].name);
  }
  for (const auto& n : extra_names) line += ',' + csv_field(n);
  out << line << '\n';
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < specs.size(); ++j) {
      if (j) line += ',';
      const double v = t.values(i, static_cast<Eigen::Index>(j));
      if (specs[j].role == FactorRole::categorical)
        line += csv_field(specs[j].levels[static_cast<std::size_t>(v)]);
      else
        line += format_number(v);
    }
    if (extra)
      for (Eigen::Index k = 0; k < extra->cols(); ++k) line += ',' + format_number((*extra)(i, k));
    out << line << '\n';
  }
}

void RunConfig::validate() const {
  if (responses.empty()) throw SchemaError("no response columns requested");
  std::vector<std::string> sorted = responses;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw SchemaError("response columns are listed more than once");
  settings.validate();
}

bool RunReport::all_ok() const {
  return std::all_of(outcomes.begin(), outcomes.end(),
                     [](const ResponseOutcome& o) { return o.result.has_value(); });
}

RunReport run_tests(const StudyConfig& study, const Dataset& data, Learner learner,
                    const TestSettings& settings) {
  RunReport report;
  for (std::size_t k = 0; k < data.responses.size(); ++k) {
    const ResponseData& rd = data.responses[k];
    ResponseOutcome outcome;
    outcome.name = rd.name;
    outcome.n_rows = rd.y.size();
    try {
      Eigen::MatrixXd rows(static_cast<Eigen::Index>(rd.rows.size()), data.factors.values.cols());
      for (std::size_t i = 0; i < rd.rows.size(); ++i)
        rows.row(static_cast<Eigen::Index>(i)) = data.factors.values.row(rd.rows[i]);
      const FactorTable x = make_factor_table(study.factors, std::move(rows));
      TestSettings local = settings;
      local.seed = derive_seed(settings.seed, {stream::kResponse, k});
      outcome.result = whole_model_test(x, rd.y, study.factors, study.terms, learner, local);
    } catch (const std::exception& e) {
      outcome.error = e.what();
      spdlog::error("response '{}': {}", rd.name, e.what());
    }
    report.outcomes.push_back(std::move(outcome));
  }
  return report;
}

void write_pvalue_table(std::ostream& out, const RunReport& report) {
  out << "response,n_rows,p_value,display,k,reference_family\n";
  for (const auto& o : report.outcomes) {
    if (!o.result) continue;
    const auto& r = *o.result;
    out << csv_field(o.name) << ',' << o.n_rows << ',' << fmt::format("{:.6f}", r.p_value) << ','
        << format_p_value(r.p_value) << ',' << r.k << ',' << to_string(r.reference.family) << '\n';
  }
}

void write_distances_csv(std::ostream& out, const RunReport& report) {
  out << "response,group,distance\n";
  for (const auto& o : report.outcomes) {
    if (!o.result) continue;
    const std::string name = csv_field(o.name);
    for (double d : o.result->d_ref) out << name << ",reference," << format_number(d) << '\n';
    for (double d : o.result->d_obs) out << name << ",observed," << format_number(d) << '\n';
  }
}

void write_errors_csv(std::ostream& out, const RunReport& report) {
  out << "response,error\n";
  for (const auto& o : report.outcomes)
    if (!o.result) out << csv_field(o.name) << ',' << csv_field(o.error) << '\n';
}

void write_summary_json(std::ostream& out, const RunConfig& config, const RunReport& report) {
  Json j;
  j["data"] = config.data_path.filename().string();
  j["config"] = config.config_path.filename().string();
  j["learner"] = std::string(to_string(config.learner));
  j["settings"] = settings_json(config.settings);
  Json rs = Json::array();
  for (std::size_t k = 0; k < report.outcomes.size(); ++k) {
    const auto& o = report.outcomes[k];
    Json r;
    r["response"] = o.name;
    r["seed"] = derive_seed(config.settings.seed, {stream::kResponse, k});
    r["n_rows"] = o.n_rows;
    if (o.result) {
      const auto& t = *o.result;
      r["p_value"] = t.p_value;
      r["display"] = format_p_value(t.p_value);
      r["k"] = t.k;
      r["rank"] = t.eigenvalues.size();
      r["y_bar"] = t.y_bar;
      r["reference"] = reference_json(t.reference);
      r["fallbacks"] = t.fallbacks;
    } else {
      r["error"] = o.error;
    }
    rs.push_back(std::move(r));
  }
  j["responses"] = std::move(rs);
  out << j.dump(2) << '\n';
}

std::string format_pvalue_console(const RunReport& report) {
  std::size_t width = 8;
  for (const auto& o : report.outcomes) width = std::max(width, o.name.size());
  std::string s = fmt::format("{:<{}}  {}\n", "Response", width, "p-Value");
  for (const auto& o : report.outcomes)
    s += fmt::format("{:<{}}  {}\n", o.name, width,
                     o.result ? format_p_value(o.result->p_value) : "error: " + o.error);
  return s;
}

void write_distance_svg(std::ostream& out, const RunReport& report) {
  std::vector<const ResponseOutcome*> panels;
  for (const auto& o : report.outcomes)
    if (o.result) panels.push_back(&o);
  const double pw = 260, ph = 320, left = 60, top = 40, plot_w = 170, plot_h = 220;
  const double width = std::max<double>(1.0, static_cast<double>(panels.size())) * pw;
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, ph);
  out << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, ph);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& r = *panels[p]->result;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double d : r.d_ref) lo = std::min(lo, d), hi = std::max(hi, d);
    for (double d : r.d_obs) lo = std::min(lo, d), hi = std::max(hi, d);
    const bool log_axis = lo > 0.0 && hi / lo > 100.0;
    const auto tf = [&](double d) { return log_axis ? std::log10(d) : d; };
    double a = log_axis ? tf(lo) : 0.0;
    double b = tf(hi);
    if (!(b > a)) b = a + 1.0;
    const double ox = static_cast<double>(p) * pw + left;
    const auto ypos = [&](double d) { return top + plot_h - (tf(d) - a) / (b - a) * plot_h; };

    out << fmt::format("<g>\n<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
                       ox + plot_w / 2, xml_escape(panels[p]->name));
    out << fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", ox,
        top, plot_w, plot_h);
    for (int t = 0; t <= 4; ++t) {
      const double v = a + (b - a) * t / 4.0;
      const double y = top + plot_h - plot_h * t / 4.0;
      const double label = log_axis ? std::pow(10.0, v) : v;
      out << fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n", ox - 4,
                         y + 4, label);
    }
    const auto group = [&](const Eigen::VectorXd& d, double cx, const char* colour) {
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        // Deterministic horizontal jitter.
        const double jitter =
            (static_cast<double>(mix64(static_cast<std::uint64_t>(i)) >> 11) * 0x1.0p-53 - 0.5) * 40.0;
        out << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
                           cx + jitter, ypos(d(i)), colour);
      }
    };
    group(r.d_ref, ox + plot_w * 0.3, "#4878a8");
    group(r.d_obs, ox + plot_w * 0.75, "#d0482a");
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">permuted</text>\n",
                       ox + plot_w * 0.3, top + plot_h + 16);
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">observed</text>\n",
                       ox + plot_w * 0.75, top + plot_h + 16);
    out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">p = {}</text>\n</g>\n",
                       ox + plot_w / 2, top + plot_h + 40, xml_escape(format_p_value(r.p_value)));
  }
  out << "</svg>\n";
}

RunReport run_test_command(const RunConfig& config) {
  config.validate();
  const StudyConfig study = load_study_config(config.config_path.string());
  const Dataset data = ingest_dataset(config.data_path, study.factors, config.responses);
  RunReport report = run_tests(study, data, config.learner, config.settings);

  std::filesystem::create_directories(config.output_dir);
  const auto open = [&](const char* name) {
    std::ofstream f(config.output_dir / name, std::ios::binary);
    if (!f) throw IngestionError("cannot write '" + (config.output_dir / name).string() + "'");
    return f;
  };
  {
    auto f = open("pvalues.csv");
    write_pvalue_table(f, report);
  }
  {
    auto f = open("distances.csv");
    write_distances_csv(f, report);
  }
  {
    auto f = open("summary.json");
    write_summary_json(f, config, report);
  }
  {
    auto f = open("distances.svg");
    write_distance_svg(f, report);
  }
  if (!report.all_ok()) {
    auto f = open("errors.csv");
    write_errors_csv(f, report);
  }
  return report;
}

void write_power_csv(std::ostream& out, std::span<const PowerPoint> points) {
  out << "beta,method,rejections,trials\n";
  for (const auto& p : points)
    out << format_number(p.beta) << ',' << to_string(p.method) << ',' << p.rejections << ','
        << p.trials << '\n';
}

void write_power_metadata(std::ostream& out, const PowerRunMetadata& meta) {
  Json j;
  j["scenario"] = meta.scenario;
  j["trials"] = meta.trials;
  j["settings"] = settings_json(meta.settings);
  j["design"] = {{"type", "central composite"},
                 {"alpha_mode", std::string(to_string(meta.options.alpha_mode))},
                 {"axial_distance", ccd_axial_distance(meta.options.alpha_mode)},
                 {"center_runs", meta.options.n_center},
                 {"runs", 14 + meta.options.n_center}};
  j["alpha_level"] = meta.options.alpha_level;
  j["betas"] = meta.betas;
  Json methods = Json::array();
  for (auto m : meta.methods) methods.push_back(std::string(to_string(m)));
  j["methods"] = std::move(methods);
  out << j.dump(2) << '\n';
}

void write_power_svg(std::ostream& out, std::span<const PowerPoint> points, int scenario) {
  const double left = 60, top = 40, plot_w = 420, plot_h = 280, width = 640, height = 380;
  double beta_max = 0.0;
  std::vector<PowerMethod> methods;
  for (const auto& p : points) {
    beta_max = std::max(beta_max, p.beta);
    if (std::find(methods.begin(), methods.end(), p.method) == methods.end())
      methods.push_back(p.method);
  }
  if (!(beta_max > 0.0)) beta_max = 1.0;
  const auto xpos = [&](double b) { return left + b / beta_max * plot_w; };
  const auto ypos = [&](double v) { return top + plot_h - v * plot_h; };
  static constexpr const char* colours[] = {"#d0482a", "#4878a8", "#3a9a48", "#8a5ab0"};

  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height);
  out << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", width, height);
  out << fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"13\">Scenario {} power</text>\n",
                     left + plot_w / 2, scenario);
  out << fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", left,
      top, plot_w, plot_h);
  for (int t = 0; t <= 4; ++t) {
    out << fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:.2f}</text>\n", left - 4,
                       ypos(t / 4.0) + 4, t / 4.0);
    out << fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n",
                       xpos(beta_max * t / 4.0), top + plot_h + 16, beta_max * t / 4.0);
  }
  out << fmt::format("<line x1=\"{}\" x2=\"{}\" y1=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
                     left, left + plot_w, ypos(0.05), ypos(0.05));
  out << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">beta</text>\n",
                     left + plot_w / 2, top + plot_h + 34);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<PowerPoint> line;
    for (const auto& p : points)
      if (p.method == methods[m]) line.push_back(p);
    std::sort(line.begin(), line.end(),
              [](const PowerPoint& x, const PowerPoint& y) { return x.beta < y.beta; });
    std::string pts;
    for (const auto& p : line) pts += fmt::format("{:.2f},{:.2f} ", xpos(p.beta), ypos(p.power()));
    const char* colour = colours[m % 4];
    out << fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       pts, colour);
    out << fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", left + plot_w + 12,
                       top + 14 + 16 * static_cast<double>(m), colour, to_string(methods[m]));
  }
  out << "</svg>\n";
}

}  // namespace svem
