#include "sfa/dataset.hpp"

#include <algorithm>
#include <set>

namespace sfa {

Eigen::MatrixXd Dataset::endo_matrix() const {
  Eigen::MatrixXd r(n(), d());
  for (int j = 0; j < d(); ++j) {
    const auto& e = endo[j];
    r.col(j) = e.source == 0 ? x.col(e.col) : z.col(e.col);
  }
  return r;
}

std::string Dataset::endo_name(int i) const {
  const auto& e = endo[i];
  const auto& names = e.source == 0 ? x_names : z_names;
  if (e.col < static_cast<int>(names.size())) return names[e.col];
  return (e.source == 0 ? "x" : "z") + std::to_string(e.col);
}

Observation Dataset::row(int i) const {
  Observation o;
  o.y = y[i];
  o.x = x.row(i).transpose();
  o.z = z.row(i).transpose();
  o.w = w.row(i).transpose();
  return o;
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset s = *this;
  const int m = static_cast<int>(rows.size());
  s.y.resize(m);
  s.x.resize(m, x.cols());
  s.z.resize(m, z.cols());
  s.w.resize(m, w.cols());
  for (int i = 0; i < m; ++i) {
    s.y[i] = y[rows[i]];
    s.x.row(i) = x.row(rows[i]);
    s.z.row(i) = z.row(rows[i]);
    s.w.row(i) = w.row(rows[i]);
  }
  return s;
}

Model model_from(const Dataset& ds, bool exogenous) {
  Model m;
  m.px = static_cast<int>(ds.x.cols());
  m.kz = static_cast<int>(ds.z.cols());
  m.q = static_cast<int>(ds.w.cols());
  if (!exogenous) m.endo = ds.endo;
  return m;
}

void validate_dataset(const Dataset& ds) {
  if (ds.n() == 0) throw DimensionError("dataset is empty");
  if (ds.x.rows() != ds.n() || ds.z.rows() != ds.n() || ds.w.rows() != ds.n())
    throw DimensionError("dataset matrices have inconsistent row counts");
  if (!ds.y.allFinite() || !ds.x.allFinite() || !ds.z.allFinite() ||
      !ds.w.allFinite())
    throw Error("dataset contains non-finite values");
  for (const auto& e : ds.endo) {
    const int cols = e.source == 0 ? static_cast<int>(ds.x.cols())
                                   : static_cast<int>(ds.z.cols());
    if (e.col < 0 || e.col >= cols)
      throw DimensionError("endogenous column index out of range");
  }
  if (ds.d() > 0 && static_cast<int>(ds.w.cols()) < ds.d())
    throw DimensionError("need at least as many instruments as endogenous variables");
  if (!ds.x_names.empty() && ds.x_names == ds.z_names)
    throw Error("X and Z must have at least one non-overlapping column");
}

}  // namespace sfa
