#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "talkmoves/csv.hpp"
#include "talkmoves/inference.hpp"
#include "talkmoves/labels.hpp"
#include "talkmoves/ols.hpp"

namespace talkmoves {

enum class Outcome { subsequent_attendance, helpfulness_rating, assignments_completed };
enum class AnalysisUnit { transcript, student };

inline constexpr std::array<Outcome, 3> kOutcomes = {
    Outcome::subsequent_attendance, Outcome::helpfulness_rating,
    Outcome::assignments_completed};

std::string_view outcome_name(Outcome outcome);
Outcome parse_outcome(std::string_view name);
std::string_view unit_name(AnalysisUnit unit);
// Attendance is a transcript-level outcome; ratings and assignments are
// student-level.
AnalysisUnit natural_unit(Outcome outcome);

struct InstructorCovariates {
  double female = 0.0;
  double first_time = 0.0;
  double in_us = 0.0;
  double age = 0.0;
  double age_squared() const { return age * age; }
};

struct SectionCovariates {
  double prop_female = 0.0;
  double prop_us = 0.0;
  double prop_age_22_25 = 0.0;
  double prop_age_26_30 = 0.0;
  double prop_age_31_35 = 0.0;
  double prop_age_36_40 = 0.0;
  double prop_age_40_plus = 0.0;
};

// Column names of the outcomes/covariates CSV.
inline constexpr std::string_view kSessionIdColumn = "session_id";
inline constexpr std::string_view kStudentIdColumn = "student_id";
inline constexpr std::string_view kInstructorIdColumn = "instructor_id";
inline constexpr std::array<std::string_view, 4> kInstructorCovariateColumns = {
    "female", "first_time", "in_us", "age"};
inline constexpr std::array<std::string_view, 7> kSectionCovariateColumns = {
    "prop_female",    "prop_us",        "prop_age_22_25",  "prop_age_26_30",
    "prop_age_31_35", "prop_age_36_40", "prop_age_40_plus"};

// Regressor names after the talk-move rate, in design-matrix order.
std::vector<std::string> covariate_terms();

struct RegressionSpec {
  Outcome outcome = Outcome::subsequent_attendance;
  Move predictor_move = Move::adding_on;
  AnalysisUnit unit = AnalysisUnit::transcript;
  std::string cluster_key = std::string(kInstructorIdColumn);

  // Throws ValidationError when the unit does not match the outcome.
  void validate() const;
};

// One (move x outcome) spec per pair, moves outer.
std::vector<RegressionSpec> default_specs(std::span<const Move> moves);

struct RegressionResult {
  std::map<std::string, double> coefficients;
  std::map<std::string, double> clustered_se;
  std::map<std::string, double> t_stats;
  std::map<std::string, double> p_values;
  std::map<std::string, std::string> stars;
  std::vector<double> residuals;
  std::size_t n_obs = 0;
  std::size_t n_clusters = 0;
  bool p_values_defined = true;
};

struct RegressionCell {
  RegressionSpec spec;
  bool ok = false;
  std::string error;  // set when the fit failed
  std::size_t dropped_rows = 0;
  RegressionResult result;

  // The talk-move rate term.
  double beta() const;
  double se() const;
  double p_value() const;
  std::string stars() const;
};

// Transcript-level rows have an empty student_id; student-level rows do not.
// Every row needs the covariate columns; empty outcome or covariate cells
// and sessions without features are dropped and counted.
// Throws JoinError when a required column is missing.
std::vector<RegressionCell> run_table(const std::vector<SessionFeatures>& features,
                                      const CsvTable& outcomes,
                                      const std::vector<RegressionSpec>& specs);

RegressionCell run_regression(const std::vector<SessionFeatures>& features,
                              const CsvTable& outcomes, const RegressionSpec& spec);

inline constexpr double kInterpretationScale = 10.0;

// move,outcome,unit,status,beta,se,t,p,stars,n_obs,n_clusters,dropped,beta_x10,error
void write_table_csv(const std::vector<RegressionCell>& cells, std::ostream& out);
// Rows = moves, columns = outcomes, stars attached to the coefficient.
std::string render_table_text(const std::vector<RegressionCell>& cells, bool scale_by_ten = false);

}  // namespace talkmoves
