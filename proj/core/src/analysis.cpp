#include "talkmoves/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "talkmoves/errors.hpp"

namespace talkmoves {

std::string_view outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::subsequent_attendance: return "subsequent_attendance";
    case Outcome::helpfulness_rating: return "helpfulness_rating";
    case Outcome::assignments_completed: return "assignments_completed";
  }
  return "unknown";
}

Outcome parse_outcome(std::string_view name) {
  for (Outcome o : kOutcomes) {
    if (outcome_name(o) == name) return o;
  }
  throw ValidationError("unknown outcome '" + std::string(name) + "'");
}

std::string_view unit_name(AnalysisUnit unit) {
  return unit == AnalysisUnit::transcript ? "transcript" : "student";
}

AnalysisUnit natural_unit(Outcome outcome) {
  return outcome == Outcome::subsequent_attendance ? AnalysisUnit::transcript
                                                   : AnalysisUnit::student;
}

std::vector<std::string> covariate_terms() {
  return {"female",         "first_time",     "in_us",          "age",
          "age_squared",    "prop_female",    "prop_us",        "prop_age_22_25",
          "prop_age_26_30", "prop_age_31_35", "prop_age_36_40", "prop_age_40_plus"};
}

void RegressionSpec::validate() const {
  if (unit != natural_unit(outcome)) {
    throw ValidationError(std::string(outcome_name(outcome)) + " is a " +
                          std::string(unit_name(natural_unit(outcome))) +
                          "-level outcome, not " + std::string(unit_name(unit)) + "-level");
  }
  if (cluster_key.empty()) throw ValidationError("cluster key must be set");
}

std::vector<RegressionSpec> default_specs(std::span<const Move> moves) {
  std::vector<RegressionSpec> specs;
  for (Move m : moves) {
    for (Outcome o : kOutcomes) {
      RegressionSpec s;
      s.outcome = o;
      s.predictor_move = m;
      s.unit = natural_unit(o);
      specs.push_back(s);
    }
  }
  return specs;
}

namespace {

std::string rate_term(Move m) { return "rate_" + std::string(move_name(m)); }

double lookup(const std::map<std::string, double>& values, const std::string& key) {
  auto it = values.find(key);
  return it == values.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
}

struct Columns {
  std::size_t session;
  std::optional<std::size_t> student;
  std::size_t cluster;
  std::size_t outcome;
  std::array<std::size_t, 4> instructor;
  std::array<std::size_t, 7> section;
};

Columns resolve_columns(const CsvTable& table, const RegressionSpec& spec) {
  Columns c{};
  c.session = table.require_column(kSessionIdColumn);
  c.student = table.column(kStudentIdColumn);
  if (spec.unit == AnalysisUnit::student && !c.student) table.require_column(kStudentIdColumn);
  c.cluster = table.require_column(spec.cluster_key);
  c.outcome = table.require_column(outcome_name(spec.outcome));
  for (std::size_t i = 0; i < c.instructor.size(); ++i) {
    c.instructor[i] = table.require_column(kInstructorCovariateColumns[i]);
  }
  for (std::size_t i = 0; i < c.section.size(); ++i) {
    c.section[i] = table.require_column(kSectionCovariateColumns[i]);
  }
  return c;
}

void check_indicator(double v, std::string_view name) {
  if (v != 0.0 && v != 1.0) {
    throw ValidationError(std::string(name) + " must be 0 or 1, got " + format_double(v));
  }
}

void check_proportion(double v, std::string_view name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(std::string(name) + " must be in [0, 1], got " + format_double(v));
  }
}

}  // namespace

double RegressionCell::beta() const {
  return lookup(result.coefficients, rate_term(spec.predictor_move));
}
double RegressionCell::se() const {
  return lookup(result.clustered_se, rate_term(spec.predictor_move));
}
double RegressionCell::p_value() const {
  return lookup(result.p_values, rate_term(spec.predictor_move));
}
std::string RegressionCell::stars() const {
  auto it = result.stars.find(rate_term(spec.predictor_move));
  return it == result.stars.end() ? std::string() : it->second;
}

RegressionCell run_regression(const std::vector<SessionFeatures>& features,
                              const CsvTable& outcomes, const RegressionSpec& spec) {
  RegressionCell cell;
  cell.spec = spec;
  spec.validate();
  const Columns cols = resolve_columns(outcomes, spec);

  std::unordered_map<std::string, const SessionFeatures*> by_session;
  for (const auto& f : features) by_session.emplace(f.session_id, &f);

  const std::size_t k = 1 + covariate_terms().size();
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  std::vector<std::string> clusters;
  for (const auto& row : outcomes.rows()) {
    const bool student_row = cols.student && !row[*cols.student].empty();
    if (student_row != (spec.unit == AnalysisUnit::student)) continue;

    auto drop = [&] { ++cell.dropped_rows; };
    auto fit = by_session.find(row[cols.session]);
    if (fit == by_session.end()) { drop(); continue; }
    auto rate = fit->second->rate_per_hour.find(spec.predictor_move);
    if (rate == fit->second->rate_per_hour.end()) { drop(); continue; }
    if (row[cols.cluster].empty()) { drop(); continue; }
    auto outcome = parse_double(row[cols.outcome]);
    if (!outcome) { drop(); continue; }

    std::vector<double> x;
    x.reserve(k);
    x.push_back(rate->second);
    bool missing = false;
    std::array<double, 4> ins{};
    for (std::size_t i = 0; i < ins.size() && !missing; ++i) {
      auto v = parse_double(row[cols.instructor[i]]);
      if (!v) missing = true; else ins[i] = *v;
    }
    std::array<double, 7> sec{};
    for (std::size_t i = 0; i < sec.size() && !missing; ++i) {
      auto v = parse_double(row[cols.section[i]]);
      if (!v) missing = true; else sec[i] = *v;
    }
    if (missing) { drop(); continue; }

    InstructorCovariates t{ins[0], ins[1], ins[2], ins[3]};
    check_indicator(t.female, "female");
    check_indicator(t.first_time, "first_time");
    check_indicator(t.in_us, "in_us");
    if (!(t.age > 0.0)) throw ValidationError("age must be positive");
    for (std::size_t i = 0; i < sec.size(); ++i) check_proportion(sec[i], kSectionCovariateColumns[i]);

    x.insert(x.end(), {t.female, t.first_time, t.in_us, t.age, t.age_squared()});
    x.insert(x.end(), sec.begin(), sec.end());
    rows.push_back(std::move(x));
    y.push_back(*outcome);
    clusters.push_back(row[cols.cluster]);
  }

  Eigen::MatrixXd design(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  Eigen::VectorXd outcome_vec = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  std::vector<std::string> names = {rate_term(spec.predictor_move)};
  for (auto& t : covariate_terms()) names.push_back(std::move(t));

  const OlsFit fit = fit_ols(design, outcome_vec, names);
  const ClusterRobust cr = cluster_robust_se(fit, clusters);
  RegressionResult& res = cell.result;
  for (std::size_t j = 0; j < fit.terms.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const std::string& term = fit.terms[j];
    res.coefficients[term] = fit.coefficients(jj);
    res.clustered_se[term] = cr.standard_errors(jj);
    res.t_stats[term] = cr.t_stats(jj);
    res.p_values[term] = cr.p_values(jj);
    res.stars[term] = std::isnan(cr.p_values(jj)) ? "" : significance_stars(cr.p_values(jj));
  }
  res.residuals.assign(fit.residuals.data(), fit.residuals.data() + fit.residuals.size());
  res.n_obs = fit.n_obs();
  res.n_clusters = cr.n_clusters;
  res.p_values_defined = cr.p_values_defined;
  cell.ok = true;
  return cell;
}

std::vector<RegressionCell> run_table(const std::vector<SessionFeatures>& features,
                                      const CsvTable& outcomes,
                                      const std::vector<RegressionSpec>& specs) {
  std::vector<RegressionCell> cells;
  cells.reserve(specs.size());
  for (const auto& spec : specs) {
    spec.validate();
    resolve_columns(outcomes, spec);  // JoinError surfaces for the whole table
  }
  for (const auto& spec : specs) {
    try {
      cells.push_back(run_regression(features, outcomes, spec));
    } catch (const JoinError&) {
      throw;
    } catch (const Error& e) {
      RegressionCell failed;
      failed.spec = spec;
      failed.error = e.what();
      cells.push_back(std::move(failed));
    }
  }
  return cells;
}

namespace {

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string maybe(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

void write_table_csv(const std::vector<RegressionCell>& cells, std::ostream& out) {
  CsvTable table({"move", "outcome", "unit", "status", "beta", "se", "t", "p", "stars", "n_obs",
                  "n_clusters", "dropped", "beta_x10", "error"});
  for (const auto& c : cells) {
    const std::string term = rate_term(c.spec.predictor_move);
    std::vector<std::string> row = {std::string(move_name(c.spec.predictor_move)),
                                    std::string(outcome_name(c.spec.outcome)),
                                    std::string(unit_name(c.spec.unit)),
                                    c.ok ? "ok" : "failed"};
    if (c.ok) {
      row.push_back(format_double(c.beta()));
      row.push_back(format_double(c.se()));
      row.push_back(maybe(lookup(c.result.t_stats, term)));
      row.push_back(maybe(c.p_value()));
      row.push_back(c.stars());
      row.push_back(std::to_string(c.result.n_obs));
      row.push_back(std::to_string(c.result.n_clusters));
      row.push_back(std::to_string(c.dropped_rows));
      row.push_back(format_double(c.beta() * kInterpretationScale));
      row.emplace_back();
    } else {
      row.insert(row.end(), 8, std::string());
      row.emplace_back();
      row.push_back(c.error);
    }
    table.add_row(std::move(row));
  }
  table.write(out);
}

std::string render_table_text(const std::vector<RegressionCell>& cells, bool scale_by_ten) {
  std::vector<Move> moves;
  std::vector<Outcome> outcomes;
  std::map<std::pair<Move, Outcome>, std::string> text;
  for (const auto& c : cells) {
    if (std::find(moves.begin(), moves.end(), c.spec.predictor_move) == moves.end()) {
      moves.push_back(c.spec.predictor_move);
    }
    if (std::find(outcomes.begin(), outcomes.end(), c.spec.outcome) == outcomes.end()) {
      outcomes.push_back(c.spec.outcome);
    }
    std::string s = "failed";
    if (c.ok) s = fixed3(c.beta() * (scale_by_ten ? kInterpretationScale : 1.0)) + c.stars();
    text[{c.spec.predictor_move, c.spec.outcome}] = s;
  }

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header = {"move"};
  for (Outcome o : outcomes) header.emplace_back(outcome_name(o));
  grid.push_back(header);
  for (Move m : moves) {
    std::vector<std::string> row = {std::string(move_name(m))};
    for (Outcome o : outcomes) {
      auto it = text.find({m, o});
      row.push_back(it == text.end() ? "" : it->second);
    }
    grid.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : grid) {
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    std::string line;
    for (std::size_t j = 0; j < grid[r].size(); ++j) {
      const std::string& v = grid[r][j];
      if (j == 0) {
        line += v + std::string(width[j] - v.size(), ' ');
      } else {
        line += "  " + std::string(width[j] - v.size(), ' ') + v;
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (r == 0) {
      std::size_t total = width[0];
      for (std::size_t j = 1; j < width.size(); ++j) total += 2 + width[j];
      out << std::string(total, '-') << '\n';
    }
  }
  out << "* p < 0.05, ** p < 0.01; standard errors clustered by instructor";
  if (scale_by_ten) out << "; coefficients x10";
  out << '\n';
  return out.str();
}

}  // namespace talkmoves
