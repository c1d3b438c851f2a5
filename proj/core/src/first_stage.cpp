#include "sfa/first_stage.hpp"

#include <Eigen/QR>
#include <cmath>

namespace sfa {

FirstStage first_stage_ols(const Dataset& ds) {
  validate_dataset(ds);
  const int d = ds.d();
  const int q = static_cast<int>(ds.w.cols());
  if (d == 0) return {};
  if (ds.n() <= q) throw SingularDesign("first stage: n must exceed q");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ds.w);
  qr.setThreshold(1e-10);
  if (qr.rank() < q)
    throw SingularDesign("first stage: instrument matrix is rank deficient");

  FirstStage out;
  const Eigen::MatrixXd r = ds.endo_matrix();
  out.gamma = qr.solve(r);
  out.residuals = r - ds.w * out.gamma;

  const double n = static_cast<double>(ds.n());
  out.d_eta = (out.residuals.colwise().squaredNorm() / n).cwiseSqrt().transpose();

  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = j + 1; i < d; ++i) {
      const double denom = out.d_eta[i] * out.d_eta[j] * n;
      const double v =
          denom > 0.0 ? out.residuals.col(i).dot(out.residuals.col(j)) / denom : 0.0;
      c(i, j) = v;
      c(j, i) = v;
    }
  out.c_eta_lower = pack_lower_triangle(c);
  return out;
}

}  // namespace sfa
