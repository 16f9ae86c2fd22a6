#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "symbatch/core/csv.hpp"
#include "symbatch/core/error.hpp"
#include "symbatch/core/linalg.hpp"
#include "symbatch/core/rng.hpp"

namespace symbatch {

/// N labelled feature vectors: row i of `features` is ỹ_i, labels[i] is z_i ∈ {0, 1}.
class Dataset {
 public:
  Dataset(Matrix features, std::vector<double> labels)
      : features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.rows() == 0 || features_.cols() == 0)
      throw ConfigError("Dataset: need N >= 1 and d >= 1");
    if (labels_.size() != features_.rows())
      throw ConfigError("Dataset: " + std::to_string(labels_.size()) + " labels for " +
                        std::to_string(features_.rows()) + " rows");
    for (double z : labels_)
      if (z != 0.0 && z != 1.0) throw ConfigError("Dataset: labels must be 0 or 1");
    if (!all_finite(features_.data())) throw ConfigError("Dataset: non-finite feature value");
  }

  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<double>& labels() const noexcept { return labels_; }
  std::span<const double> features_row(std::size_t i) const { return features_.row(i); }
  double label(std::size_t i) const { return labels_[i]; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Matrix features_;
  std::vector<double> labels_;
};

/// Parses `label,feat_1,...,feat_d` rows. A first line whose first field is
/// not numeric is treated as a header. Blank lines are ignored.
inline Dataset parse_dataset_csv(std::istream& in) {
  std::vector<double> labels;
  std::vector<double> values;
  std::size_t d = 0;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = csv::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = csv::split(trimmed);
    if (!seen_content) {
      seen_content = true;
      if (!csv::parse_double(fields.front())) continue;  // header row
    }
    if (fields.size() < 2)
      throw ParseError("line " + std::to_string(line_no) + ": expected label and at least one feature");
    if (d == 0) d = fields.size() - 1;
    if (fields.size() != d + 1)
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) +
                       " fields, got " + std::to_string(fields.size()));
    const auto z = csv::parse_double(fields[0]);
    if (!z) throw ParseError("line " + std::to_string(line_no) + ": non-numeric label");
    if (*z != 0.0 && *z != 1.0)
      throw ParseError("line " + std::to_string(line_no) + ": label must be 0 or 1");
    labels.push_back(*z);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      const auto v = csv::parse_double(fields[j]);
      if (!v || !std::isfinite(*v))
        throw ParseError("line " + std::to_string(line_no) + ": field " + std::to_string(j + 1) +
                         " is not a finite number");
      values.push_back(*v);
    }
  }
  if (labels.empty()) throw ParseError("dataset file contains no data rows");
  const std::size_t rows = labels.size();
  return Dataset(Matrix(rows, d, std::move(values)), std::move(labels));
}

inline Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");
  try {
    return parse_dataset_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_dataset_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << csv::format_double(data.label(i));
    for (double v : data.features_row(i)) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

inline void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_dataset_csv(data, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

/// Synthetic logistic-regression data: standard-normal features, a hidden
/// standard-normal parameter θ, and labels z_i ~ Bernoulli(sigmoid(θᵀỹ_i)).
inline Dataset generate_simdata(std::size_t n_points, std::size_t dim, RngStream& rng) {
  if (n_points == 0 || dim == 0) throw ConfigError("generate_simdata: need N >= 1 and d >= 1");
  Vector theta(dim);
  for (double& t : theta) t = rng.normal();
  Matrix features(n_points, dim);
  std::vector<double> labels(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    auto row = features.row(i);
    for (double& v : row) v = rng.normal();
    const double p = 1.0 / (1.0 + std::exp(-dot(theta, row)));
    labels[i] = rng.uniform() < p ? 1.0 : 0.0;
  }
  return Dataset(std::move(features), std::move(labels));
}

}  // namespace symbatch
