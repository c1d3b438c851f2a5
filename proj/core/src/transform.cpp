#include "sfa/transform.hpp"

#include <cmath>

namespace sfa {

namespace {

double logit(double r) { return std::log(r / (1.0 - r)); }
double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

ParamSpace::ParamSpace(const Model& model, FitMode mode, bool two_stage,
                       ParamVector base)
    : model_(model), mode_(mode), two_stage_(two_stage), base_(std::move(base)) {
  nb_ = static_cast<int>(base_.beta.size());
  const int kz = static_cast<int>(base_.delta.size());
  const int d = mode == FitMode::Exogenous ? 0 : model_.d();
  rho_free_ = d > 0;
  rho_u_free_ = rho_free_ && mode == FitMode::EndoFull;
  first_stage_free_ = rho_free_ && !two_stage;
  dim_ = nb_ + kz + 2;  // beta, delta, log sigma2_v, log sigma2_u
  if (rho_free_) dim_ += d;          // rho_v
  if (rho_u_free_) dim_ += d;        // rho_u
  if (first_stage_free_) dim_ += model_.q * d + d + d * (d - 1) / 2;
}

Eigen::VectorXd ParamSpace::pack(const ParamVector& p) const {
  Eigen::VectorXd t(dim_);
  int k = 0;
  t.segment(k, nb_) = p.beta;
  k += nb_;
  t.segment(k, p.delta.size()) = p.delta;
  k += static_cast<int>(p.delta.size());
  t[k++] = std::log(p.sigma2_v);
  t[k++] = std::log(p.sigma2_u);
  const int d = mode_ == FitMode::Exogenous ? 0 : model_.d();
  if (rho_free_) {
    for (int i = 0; i < d; ++i) t[k++] = std::atanh(p.rho_v[i]);
    if (rho_u_free_) {
      t[k++] = logit(p.rho_u[0]);
      for (int i = 1; i < d; ++i) t[k++] = std::atanh(p.rho_u[i]);
    }
    if (first_stage_free_) {
      for (int j = 0; j < d; ++j)
        for (int r = 0; r < model_.q; ++r) t[k++] = p.gamma(r, j);
      for (int i = 0; i < d; ++i) t[k++] = std::log(p.d_eta[i]);
      for (int i = 0; i < p.c_eta_lower.size(); ++i)
        t[k++] = std::atanh(p.c_eta_lower[i]);
    }
  }
  return t;
}

ParamVector ParamSpace::unpack(const Eigen::VectorXd& t) const {
  ParamVector p = base_;
  int k = 0;
  p.beta = t.segment(k, nb_);
  k += nb_;
  p.delta = t.segment(k, base_.delta.size());
  k += static_cast<int>(base_.delta.size());
  p.sigma2_v = std::exp(t[k++]);
  p.sigma2_u = std::exp(t[k++]);
  const int d = mode_ == FitMode::Exogenous ? 0 : model_.d();
  if (rho_free_) {
    for (int i = 0; i < d; ++i) p.rho_v[i] = std::tanh(t[k++]);
    if (mode_ == FitMode::EndoRhoUZero) {
      p.rho_u.setZero();
    } else if (mode_ == FitMode::EndoRhoUFixed) {
      // rho_u stays at base_.rho_u
    } else {
      p.rho_u[0] = sigmoid(t[k++]);
      for (int i = 1; i < d; ++i) p.rho_u[i] = std::tanh(t[k++]);
    }
    if (first_stage_free_) {
      for (int j = 0; j < d; ++j)
        for (int r = 0; r < model_.q; ++r) p.gamma(r, j) = t[k++];
      for (int i = 0; i < d; ++i) p.d_eta[i] = std::exp(t[k++]);
      for (int i = 0; i < p.c_eta_lower.size(); ++i)
        p.c_eta_lower[i] = std::tanh(t[k++]);
    }
  }
  return p;
}

std::vector<std::string> ParamSpace::free_names() const {
  std::vector<std::string> names;
  names.reserve(dim_);
  for (int i = 0; i < nb_; ++i) names.push_back("beta" + std::to_string(i));
  for (int i = 0; i < base_.delta.size(); ++i)
    names.push_back("delta" + std::to_string(i + 1));
  names.push_back("sigma2_v");
  names.push_back("sigma2_u");
  const int d = mode_ == FitMode::Exogenous ? 0 : model_.d();
  if (rho_free_) {
    for (int i = 0; i < d; ++i) names.push_back("rho_v" + std::to_string(i + 1));
    if (rho_u_free_)
      for (int i = 0; i < d; ++i) names.push_back("rho_u" + std::to_string(i + 1));
    if (first_stage_free_) {
      for (int j = 0; j < d; ++j)
        for (int r = 0; r < model_.q; ++r)
          names.push_back("gamma_" + std::to_string(j + 1) + "_" + std::to_string(r));
      for (int i = 0; i < d; ++i) names.push_back("d_eta" + std::to_string(i + 1));
      for (int i = 0; i < base_.c_eta_lower.size(); ++i)
        names.push_back("c_eta" + std::to_string(i + 1));
    }
  }
  return names;
}

Eigen::VectorXd flatten(const ParamVector& p) {
  const int d = p.d();
  const int q = d > 0 ? static_cast<int>(p.gamma.rows()) : 0;
  const int total = static_cast<int>(p.beta.size() + p.delta.size()) + 2 + 2 * d +
                    q * d + d + d * (d - 1) / 2;
  Eigen::VectorXd v(total);
  int k = 0;
  v.segment(k, p.beta.size()) = p.beta;
  k += static_cast<int>(p.beta.size());
  v.segment(k, p.delta.size()) = p.delta;
  k += static_cast<int>(p.delta.size());
  v[k++] = p.sigma2_v;
  v[k++] = p.sigma2_u;
  v.segment(k, d) = p.rho_v;
  k += d;
  v.segment(k, d) = p.rho_u;
  k += d;
  for (int j = 0; j < d; ++j) {
    v.segment(k, q) = p.gamma.col(j);
    k += q;
  }
  v.segment(k, d) = p.d_eta;
  k += d;
  v.segment(k, p.c_eta_lower.size()) = p.c_eta_lower;
  return v;
}

ParamVector unflatten(const Eigen::VectorXd& v, const ParamVector& shape) {
  ParamVector p = shape;
  const int d = shape.d();
  const int q = d > 0 ? static_cast<int>(shape.gamma.rows()) : 0;
  int k = 0;
  p.beta = v.segment(k, shape.beta.size());
  k += static_cast<int>(shape.beta.size());
  p.delta = v.segment(k, shape.delta.size());
  k += static_cast<int>(shape.delta.size());
  p.sigma2_v = v[k++];
  p.sigma2_u = v[k++];
  p.rho_v = v.segment(k, d);
  k += d;
  p.rho_u = v.segment(k, d);
  k += d;
  for (int j = 0; j < d; ++j) {
    p.gamma.col(j) = v.segment(k, q);
    k += q;
  }
  p.d_eta = v.segment(k, d);
  k += d;
  p.c_eta_lower = v.segment(k, shape.c_eta_lower.size());
  return p;
}

std::vector<std::string> param_names(const ParamVector& shape,
                                     const std::vector<std::string>& eta_names,
                                     const std::vector<std::string>& x_names,
                                     const std::vector<std::string>& z_names,
                                     const std::vector<std::string>& w_names) {
  const int d = shape.d();
  const int q = d > 0 ? static_cast<int>(shape.gamma.rows()) : 0;
  auto eta_label = [&](int i) {
    return i < static_cast<int>(eta_names.size()) ? eta_names[i]
                                                  : "eta" + std::to_string(i + 1);
  };
  auto col_label = [](const std::vector<std::string>& names, int i,
                      const char* prefix) {
    return i < static_cast<int>(names.size()) ? names[i]
                                              : prefix + std::to_string(i + 1);
  };
  std::vector<std::string> names;
  names.push_back("beta0");
  for (int i = 1; i < shape.beta.size(); ++i)
    names.push_back("beta_" + col_label(x_names, i - 1, "x"));
  for (int i = 0; i < shape.delta.size(); ++i)
    names.push_back("delta_" + col_label(z_names, i, "z"));
  names.push_back("sigma2_v");
  names.push_back("sigma2_u");
  for (int i = 0; i < d; ++i) names.push_back("rho_v_" + eta_label(i));
  for (int i = 0; i < d; ++i) names.push_back("rho_u_" + eta_label(i));
  for (int j = 0; j < d; ++j)
    for (int r = 0; r < q; ++r)
      names.push_back("gamma_" + eta_label(j) + "_" + col_label(w_names, r, "w"));
  for (int i = 0; i < d; ++i) names.push_back("d_eta_" + eta_label(i));
  for (int j = 0; j < d; ++j)
    for (int i = j + 1; i < d; ++i)
      names.push_back("c_eta_" + eta_label(i) + "_" + eta_label(j));
  return names;
}

}  // namespace sfa
