#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bdarma/covariates.hpp"
#include "bdarma/forecast.hpp"
#include "bdarma/sampler.hpp"

namespace bdarma {

/// Observed compositions with their time labels. Labels are either all
/// ISO months ("YYYY-MM") or all integers, strictly increasing.
struct SeriesFile {
  std::string time_column = "time";
  std::vector<std::string> part_names;
  std::vector<std::string> times;
  std::vector<Composition> rows;

  bool monthly() const;
  int size() const { return static_cast<int>(rows.size()); }

  /// 1-based row index of a time label ("2020-02" or an integer label).
  int index_of(const std::string& label) const;

  /// Resolves a time reference: an ISO month is looked up among the
  /// labels, an integer is taken as a 1-based row index.
  int resolve(const std::string& reference) const;
};

/// Month count since year 0 for "YYYY-MM"; throws ValidationError otherwise.
int parse_month(const std::string& label);
std::string format_month(int months);

/// `count` consecutive monthly labels starting at `start` ("YYYY-MM"), or
/// integer labels 1..count when `start` is empty.
std::vector<std::string> time_labels(const std::string& start, int count);

/// Reads a delimiter-separated series file. Rows that already form a valid
/// composition are kept verbatim; other rows with non-negative entries are
/// passed through close_with_floor. Errors name the offending line.
SeriesFile read_series(const std::filesystem::path& path);
void write_series(const std::filesystem::path& path, const SeriesFile& series);

/// Writes a named matrix with a leading time column.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

/// Draws file: chain, iteration, parameters in ParamLayout order,
/// log_posterior, divergent.
void write_draws(const std::filesystem::path& path, const PosteriorDraws& draws);

/// Reads a draws file for `spec`; throws ValidationError when the
/// parameter columns do not match the layout of `spec`.
PosteriorDraws read_draws(const std::filesystem::path& path, const ModelSpec& spec);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace bdarma
