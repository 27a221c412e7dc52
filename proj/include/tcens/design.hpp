/**
 * @file design.hpp
 * @brief Treatment-coded design matrices from tabular records.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcens/table.hpp"

namespace tcens {

/// intercept + optional categorical group + numeric covariates.
struct DesignSpec {
  bool intercept = true;
  std::optional<std::string> group;
  std::vector<std::string> covariates;
  std::optional<std::string> reference;  ///< reference level; default first seen
};

struct Design {
  Eigen::MatrixXd X;
  std::vector<int> group;           ///< zero-based level index per row (empty without a group)
  std::vector<std::string> names;   ///< one per column of X
  std::vector<std::string> levels;  ///< group levels, reference first
};

/**
 * Build X with treatment coding: one indicator per non-reference group
 * level. Throws std::invalid_argument naming the first column that is a
 * linear combination of earlier ones.
 */
inline Design build_design(const DataTable& table, const DesignSpec& spec) {
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Design d;

  std::optional<std::size_t> gcol;
  if (spec.group) {
    gcol = table.index_of(*spec.group);
    for (const auto& row : table.rows)
      if (std::find(d.levels.begin(), d.levels.end(), row[*gcol]) == d.levels.end()) d.levels.push_back(row[*gcol]);
    if (spec.reference) {
      auto it = std::find(d.levels.begin(), d.levels.end(), *spec.reference);
      if (it == d.levels.end())
        throw std::invalid_argument("reference level '" + *spec.reference + "' not present in column '" + *spec.group + "'");
      std::rotate(d.levels.begin(), it, it + 1);
    }
    d.group.reserve(table.rows.size());
    for (const auto& row : table.rows) {
      const auto it = std::find(d.levels.begin(), d.levels.end(), row[*gcol]);
      d.group.push_back(static_cast<int>(it - d.levels.begin()));
    }
  }

  std::vector<Eigen::VectorXd> cols;
  if (spec.intercept) {
    cols.push_back(Eigen::VectorXd::Ones(n));
    d.names.emplace_back("(Intercept)");
  }
  if (gcol) {
    const std::size_t first = spec.intercept ? 1 : 0;
    for (std::size_t lv = first; lv < d.levels.size(); ++lv) {
      Eigen::VectorXd c(n);
      for (Eigen::Index i = 0; i < n; ++i) c(i) = d.group[static_cast<std::size_t>(i)] == static_cast<int>(lv) ? 1.0 : 0.0;
      cols.push_back(std::move(c));
      d.names.push_back(*spec.group + "=" + d.levels[lv]);
    }
  }
  for (const auto& name : spec.covariates) {
    const std::size_t k = table.index_of(name);
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i)
      c(i) = parse_double(table.rows[static_cast<std::size_t>(i)][k],
                          "column '" + name + "', row " + std::to_string(i + 1));
    cols.push_back(std::move(c));
    d.names.push_back(name);
  }
  if (cols.empty()) throw std::invalid_argument("design has no columns");

  d.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) d.X.col(static_cast<Eigen::Index>(j)) = cols[j];

  // Grow the column set one at a time so the error can name the culprit.
  for (Eigen::Index j = 1; j <= d.X.cols(); ++j) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X.leftCols(j));
    qr.setThreshold(1e-10);
    if (qr.rank() < j)
      throw std::invalid_argument("design matrix is rank deficient: column '" +
                                  d.names[static_cast<std::size_t>(j - 1)] +
                                  "' is collinear with earlier columns");
  }
  return d;
}

}  // namespace tcens
