#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fwc {

// One observation (D, X, Y). d and y index into the owning Dataset's level
// maps; x holds standardized features.
struct Record {
  int d = 0;
  std::vector<double> x;
  int y = 0;

  friend bool operator==(const Record&, const Record&) = default;
};

// Per-feature z-score parameters. scale == 0 marks a constant column, which is
// mapped to all zeros and restored to `mean` on inversion.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  double forward(std::size_t k, double raw) const {
    return scale[k] == 0.0 ? 0.0 : (raw - mean[k]) / scale[k];
  }
  double inverse(std::size_t k, double z) const {
    return scale[k] == 0.0 ? mean[k] : mean[k] + scale[k] * z;
  }
};

struct Dataset {
  std::vector<Record> records;
  std::vector<std::string> d_levels;
  std::vector<std::string> y_levels;
  std::vector<std::string> feature_names;
  std::string protected_name = "D";
  std::string outcome_name = "Y";
  Standardization standardization;

  std::size_t n() const { return records.size(); }
  std::size_t p() const { return feature_names.size(); }
  std::size_t num_d() const { return d_levels.size(); }
  std::size_t num_y() const { return y_levels.size(); }

  // Throws ContractViolation if any invariant is broken.
  void validate() const;
};

// m points with weights theta summing to m.
struct Coreset {
  std::vector<Record> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

enum class ColumnRole { Protected, Outcome, Feature, Ignore };

// Column name -> role. Columns not named here are treated as features.
using Schema = std::map<std::string, ColumnRole>;

ColumnRole parse_role(const std::string& text);
// "col=role,col=role" form used on the command line.
Schema parse_schema(const std::string& text);

struct SyntheticSpec {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double noise_sd = 1.0;
  // Feature count. x1 and x2 follow the biased generator; x3.. are extra
  // 5*N(0,1) columns used by the runtime sweep over p.
  std::size_t p = 2;
};

// Minimal RFC-4180 reader: quoted fields, doubled quotes, CRLF.
std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path);

Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

// Builds a Dataset from raw (unstandardized) columns, standardizing features.
// Level labels are assigned indices in order of first appearance.
Dataset make_dataset(const std::vector<std::string>& d_labels,
                     const std::vector<std::vector<double>>& raw_features,
                     const std::vector<std::string>& y_labels,
                     std::vector<std::string> feature_names,
                     std::string protected_name = "D", std::string outcome_name = "Y");

Dataset generate_synthetic(const SyntheticSpec& spec);

// Raw feature values of record i (standardization inverted).
std::vector<double> raw_features(const Dataset& dataset, std::span<const double> z);

// Writes the dataset in original units with original labels.
void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);

// Coreset rows in index order with original-scale features, original labels
// and a trailing `weight` column.
void write_coreset_csv(const Coreset& coreset, const Dataset& dataset,
                       const std::filesystem::path& path);

// Reads a file produced by write_coreset_csv back into the dataset's encoding.
// Labels unknown to the dataset or a feature set that differs are SchemaErrors.
Coreset load_coreset_csv(const std::filesystem::path& path, const Dataset& dataset);

// A CSV with the reference's protected, outcome and feature columns, encoded
// with its level maps and standardization. Extra columns are ignored.
Dataset load_csv_like(const std::filesystem::path& path, const Dataset& reference);

// Rows selected by index, keeping level maps and standardization.
Dataset subset(const Dataset& dataset, std::span<const std::size_t> rows);

}  // namespace fwc
