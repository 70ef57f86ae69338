#include "fwc/dataio.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <unordered_map>

#include "fwc/errors.hpp"

namespace fwc {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  std::string t = trim(text);
  if (t.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && errno != ERANGE && std::isfinite(out);
}

std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Index of `label` in `levels`, appending it when new.
int intern(std::vector<std::string>& levels, std::unordered_map<std::string, int>& index,
           const std::string& label) {
  auto [it, inserted] = index.try_emplace(label, static_cast<int>(levels.size()));
  if (inserted) levels.push_back(label);
  return it->second;
}

Standardization fit_standardization(const std::vector<std::vector<double>>& raw, std::size_t p) {
  Standardization st;
  st.mean.assign(p, 0.0);
  st.scale.assign(p, 0.0);
  const std::size_t n = raw.size();
  for (std::size_t k = 0; k < p; ++k) {
    double sum = 0.0;
    for (const auto& row : raw) sum += row[k];
    double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& row : raw) ss += (row[k] - mean) * (row[k] - mean);
    double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    st.mean[k] = mean;
    // Treat numerically constant columns as constant.
    st.scale[k] = sd <= 1e-12 * std::max(1.0, std::abs(mean)) ? 0.0 : sd;
  }
  return st;
}

Dataset assemble(std::vector<int> d_idx, std::vector<int> y_idx,
                 const std::vector<std::vector<double>>& raw, std::vector<std::string> d_levels,
                 std::vector<std::string> y_levels, std::vector<std::string> feature_names,
                 std::string protected_name, std::string outcome_name) {
  const std::size_t n = raw.size();
  if (n == 0) throw EmptyDatasetError("dataset has no records");
  const std::size_t p = feature_names.size();
  Dataset ds;
  ds.standardization = fit_standardization(raw, p);
  ds.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Record& r = ds.records[i];
    r.d = d_idx[i];
    r.y = y_idx[i];
    r.x.resize(p);
    for (std::size_t k = 0; k < p; ++k) r.x[k] = ds.standardization.forward(k, raw[i][k]);
  }
  ds.d_levels = std::move(d_levels);
  ds.y_levels = std::move(y_levels);
  ds.feature_names = std::move(feature_names);
  ds.protected_name = std::move(protected_name);
  ds.outcome_name = std::move(outcome_name);
  return ds;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void Dataset::validate() const {
  if (records.empty()) throw ContractViolation("dataset has no records");
  if (d_levels.empty() || y_levels.empty()) throw ContractViolation("empty level map");
  if (standardization.mean.size() != p() || standardization.scale.size() != p())
    throw ContractViolation("standardization size does not match feature count");
  for (const auto& r : records) {
    if (r.x.size() != p()) throw ContractViolation("record feature dimension mismatch");
    if (r.d < 0 || static_cast<std::size_t>(r.d) >= num_d() || r.y < 0 ||
        static_cast<std::size_t>(r.y) >= num_y())
      throw ContractViolation("record level index out of range");
  }
}

ColumnRole parse_role(const std::string& text) {
  std::string t = trim(text);
  if (t == "protected") return ColumnRole::Protected;
  if (t == "outcome") return ColumnRole::Outcome;
  if (t == "feature") return ColumnRole::Feature;
  if (t == "ignore") return ColumnRole::Ignore;
  throw SchemaError("unknown column role '" + t + "'");
}

Schema parse_schema(const std::string& text) {
  Schema schema;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) eq = item.find(':');
    if (eq == std::string::npos) throw SchemaError("schema entry '" + item + "' is not name=role");
    schema[trim(item.substr(0, eq))] = parse_role(item.substr(eq + 1));
  }
  return schema;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field in '" + path.string() + "'");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  auto rows = read_csv_rows(path);
  if (rows.empty()) throw EmptyDatasetError("'" + path.string() + "' is empty");
  std::vector<std::string> header;
  for (const auto& h : rows.front()) header.push_back(trim(h));

  std::string protected_col, outcome_col;
  for (const auto& [name, role] : schema) {
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw SchemaError("missing column '" + name + "'");
    if (role == ColumnRole::Protected) {
      if (!protected_col.empty()) throw SchemaError("schema names more than one protected column");
      protected_col = name;
    } else if (role == ColumnRole::Outcome) {
      if (!outcome_col.empty()) throw SchemaError("schema names more than one outcome column");
      outcome_col = name;
    }
  }
  if (protected_col.empty()) throw SchemaError("schema names no protected column");
  if (outcome_col.empty()) throw SchemaError("schema names no outcome column");

  std::size_t d_col = 0, y_col = 0;
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto it = schema.find(header[c]);
    ColumnRole role = it == schema.end() ? ColumnRole::Feature : it->second;
    if (role == ColumnRole::Protected) d_col = c;
    if (role == ColumnRole::Outcome) y_col = c;
    if (role == ColumnRole::Feature) {
      feature_cols.push_back(c);
      feature_names.push_back(header[c]);
    }
  }

  if (rows.size() < 2) throw EmptyDatasetError("'" + path.string() + "' has no data rows");
  std::vector<std::string> d_levels, y_levels;
  std::unordered_map<std::string, int> d_index, y_index;
  std::vector<int> d_idx, y_idx;
  std::vector<std::vector<double>> raw;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw ParseError("row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(row.size()));
    d_idx.push_back(intern(d_levels, d_index, trim(row[d_col])));
    y_idx.push_back(intern(y_levels, y_index, trim(row[y_col])));
    std::vector<double> values(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      if (!parse_double(row[feature_cols[k]], values[k]))
        throw ParseError("row " + std::to_string(r) + ", column '" + feature_names[k] +
                         "': non-numeric value '" + row[feature_cols[k]] + "'");
    }
    raw.push_back(std::move(values));
  }
  return assemble(std::move(d_idx), std::move(y_idx), raw, std::move(d_levels),
                  std::move(y_levels), std::move(feature_names), protected_col, outcome_col);
}

Dataset make_dataset(const std::vector<std::string>& d_labels,
                     const std::vector<std::vector<double>>& raw_features,
                     const std::vector<std::string>& y_labels,
                     std::vector<std::string> feature_names, std::string protected_name,
                     std::string outcome_name) {
  const std::size_t n = raw_features.size();
  if (d_labels.size() != n || y_labels.size() != n)
    throw ContractViolation("label and feature columns differ in length");
  for (const auto& row : raw_features)
    if (row.size() != feature_names.size()) throw ContractViolation("ragged feature rows");
  std::vector<std::string> d_levels, y_levels;
  std::unordered_map<std::string, int> d_index, y_index;
  std::vector<int> d_idx(n), y_idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    d_idx[i] = intern(d_levels, d_index, d_labels[i]);
    y_idx[i] = intern(y_levels, y_index, y_labels[i]);
  }
  return assemble(std::move(d_idx), std::move(y_idx), raw_features, std::move(d_levels),
                  std::move(y_levels), std::move(feature_names), std::move(protected_name),
                  std::move(outcome_name));
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 2) throw InvalidSpecError("synthetic spec needs n >= 2");
  if (spec.p < 2) throw InvalidSpecError("synthetic spec needs p >= 2");
  if (!(spec.noise_sd >= 0.0)) throw InvalidSpecError("noise_sd must be nonnegative");

  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> uniform(0.0, 10.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t n = spec.n;
  std::vector<int> d(n);
  std::vector<std::vector<double>> raw(n, std::vector<double>(spec.p));
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = coin(rng) ? 1 : 0;
    raw[i][0] = d[i] == 0 ? uniform(rng) : 0.0;
    for (std::size_t k = 1; k < spec.p; ++k) raw[i][k] = 5.0 * normal(rng);
  }
  double m_x = 0.0;
  for (const auto& row : raw) m_x += row[0] + row[1];
  m_x /= static_cast<double>(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double noise = spec.noise_sd * normal(rng);
    y[i] = raw[i][0] + raw[i][1] > m_x + noise ? 1 : 0;
  }

  std::vector<std::string> names;
  for (std::size_t k = 0; k < spec.p; ++k) names.push_back("x" + std::to_string(k + 1));
  return assemble(std::move(d), std::move(y), raw, {"0", "1"}, {"0", "1"}, std::move(names), "D",
                  "Y");
}

std::vector<double> raw_features(const Dataset& dataset, std::span<const double> z) {
  std::vector<double> out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = dataset.standardization.inverse(k, z[k]);
  return out;
}

void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << quote_field(dataset.protected_name);
  for (const auto& f : dataset.feature_names) out << ',' << quote_field(f);
  out << ',' << quote_field(dataset.outcome_name) << '\n';
  for (const auto& r : dataset.records) {
    out << quote_field(dataset.d_levels[r.d]);
    for (double v : raw_features(dataset, r.x)) out << ',' << format_number(v);
    out << ',' << quote_field(dataset.y_levels[r.y]) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_coreset_csv(const Coreset& coreset, const Dataset& dataset,
                       const std::filesystem::path& path) {
  if (coreset.weights.size() != coreset.points.size())
    throw ContractViolation("coreset weights and points differ in length");
  for (const auto& pt : coreset.points) {
    if (pt.d < 0 || static_cast<std::size_t>(pt.d) >= dataset.num_d() || pt.y < 0 ||
        static_cast<std::size_t>(pt.y) >= dataset.num_y() || pt.x.size() != dataset.p())
      throw ContractViolation("coreset point does not match the dataset encoding");
  }
  auto out = open_for_write(path);
  out << quote_field(dataset.protected_name);
  for (const auto& f : dataset.feature_names) out << ',' << quote_field(f);
  out << ',' << quote_field(dataset.outcome_name) << ",weight\n";
  for (std::size_t j = 0; j < coreset.size(); ++j) {
    const auto& pt = coreset.points[j];
    out << quote_field(dataset.d_levels[pt.d]);
    for (double v : raw_features(dataset, pt.x)) out << ',' << format_number(v);
    out << ',' << quote_field(dataset.y_levels[pt.y]) << ',' << format_number(coreset.weights[j])
        << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

// Rows of `path` encoded with the reference dataset's levels and
// standardization. With with_weight, a `weight` column is required and the
// header must hold exactly the dataset's columns plus it.
Coreset read_encoded(const std::filesystem::path& path, const Dataset& dataset, bool with_weight,
                     const std::string& what) {
  auto rows = read_csv_rows(path);
  if (rows.empty()) throw EmptyDatasetError("'" + path.string() + "' is empty");
  std::vector<std::string> header;
  for (const auto& h : rows.front()) header.push_back(trim(h));
  auto find = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(what + " file is missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::size_t d_col = find(dataset.protected_name);
  std::size_t y_col = find(dataset.outcome_name);
  std::size_t w_col = with_weight ? find("weight") : 0;
  std::vector<std::size_t> f_cols;
  for (const auto& f : dataset.feature_names) f_cols.push_back(find(f));
  if (with_weight && header.size() != dataset.p() + 3)
    throw SchemaError(what + " has " + std::to_string(header.size() - 3) +
                      " feature columns, dataset has " + std::to_string(dataset.p()));

  auto level_of = [&](const std::vector<std::string>& levels, const std::string& label,
                      const std::string& column) {
    auto it = std::find(levels.begin(), levels.end(), label);
    if (it == levels.end())
      throw SchemaError(what + " label '" + label + "' in column '" + column +
                        "' is not a dataset level");
    return static_cast<int>(it - levels.begin());
  };

  Coreset cs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw ParseError(what + " row " + std::to_string(r) + " has the wrong field count");
    Record pt;
    pt.d = level_of(dataset.d_levels, trim(row[d_col]), dataset.protected_name);
    pt.y = level_of(dataset.y_levels, trim(row[y_col]), dataset.outcome_name);
    pt.x.resize(dataset.p());
    for (std::size_t k = 0; k < dataset.p(); ++k) {
      double v = 0.0;
      if (!parse_double(row[f_cols[k]], v))
        throw ParseError(what + " row " + std::to_string(r) + ", column '" +
                         dataset.feature_names[k] + "': non-numeric value");
      pt.x[k] = dataset.standardization.forward(k, v);
    }
    double w = 1.0;
    if (with_weight && (!parse_double(row[w_col], w) || w < 0.0))
      throw ParseError(what + " row " + std::to_string(r) + ": invalid weight");
    cs.points.push_back(std::move(pt));
    cs.weights.push_back(w);
  }
  return cs;
}

}  // namespace

Coreset load_coreset_csv(const std::filesystem::path& path, const Dataset& dataset) {
  return read_encoded(path, dataset, true, "coreset");
}

Dataset load_csv_like(const std::filesystem::path& path, const Dataset& reference) {
  Coreset rows = read_encoded(path, reference, false, "holdout");
  if (rows.points.empty()) throw EmptyDatasetError("'" + path.string() + "' has no data rows");
  Dataset out = reference;
  out.records = std::move(rows.points);
  return out;
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> rows) {
  Dataset out = dataset;
  out.records.clear();
  out.records.reserve(rows.size());
  for (std::size_t i : rows) out.records.push_back(dataset.records.at(i));
  return out;
}

}  // namespace fwc
