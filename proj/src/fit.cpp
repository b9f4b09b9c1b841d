#include "esr/detection.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

namespace esr {

namespace {

std::size_t parameter_count(FitModel model) {
  switch (model) {
    case FitModel::decay:
      return 2;
    case FitModel::inversion_recovery:
    case FitModel::rabi:
      return 3;
  }
  return 0;
}

/// Model value and gradient with respect to the parameters.
double model_and_gradient(FitModel model, const Eigen::VectorXd& p, double x,
                          Eigen::Ref<Eigen::VectorXd> grad) {
  switch (model) {
    case FitModel::decay: {
      const double e = std::exp(-x / p[1]);
      grad[0] = e;
      grad[1] = p[0] * e * x / (p[1] * p[1]);
      return p[0] * e;
    }
    case FitModel::inversion_recovery: {
      const double e = std::exp(-x / p[2]);
      grad[0] = 1.0 - 2.0 * p[1] * e;
      grad[1] = -2.0 * p[0] * e;
      grad[2] = -2.0 * p[0] * p[1] * e * x / (p[2] * p[2]);
      return p[0] * (1.0 - 2.0 * p[1] * e);
    }
    case FitModel::rabi: {
      const double arg = std::numbers::pi * x / (2.0 * p[2]);
      const double s = std::sin(arg);
      grad[0] = 1.0;
      grad[1] = s * s;
      grad[2] = p[1] * 2.0 * s * std::cos(arg) * (-arg / p[2]);
      return p[0] + p[1] * s * s;
    }
  }
  return 0.0;
}

std::vector<double> initial_guess(FitModel model, std::span<const double> xs,
                                  std::span<const double> ys) {
  const auto n = xs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  const double x_span = xs[order.back()] - xs[order.front()];
  switch (model) {
    case FitModel::decay: {
      // log-linear regression on the points with the sign of the first one
      const double sign = ys[order.front()] < 0.0 ? -1.0 : 1.0;
      double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sign * ys[i] <= 0.0) continue;
        const double ly = std::log(sign * ys[i]);
        sx += xs[i];
        sy += ly;
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ly;
        ++m;
      }
      double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      if (!(slope < 0.0) || !std::isfinite(slope)) slope = -1.0 / std::max(x_span, 1e-300);
      const double intercept = (sy - slope * sx) / m;
      return {sign * std::exp(intercept), -1.0 / slope};
    }
    case FitModel::inversion_recovery: {
      const double a_inf = ys[order.back()];
      const double k = 0.5 * (1.0 - ys[order.front()] / a_inf);
      // time at which the curve crosses half way from its first value to a_inf
      const double target = 0.5 * (ys[order.front()] + a_inf);
      double t_half = 0.3 * x_span;
      for (std::size_t i = 1; i < n; ++i) {
        const double y0 = ys[order[i - 1]], y1 = ys[order[i]];
        if ((y0 - target) * (y1 - target) <= 0.0 && y1 != y0) {
          const double x0 = xs[order[i - 1]], x1 = xs[order[i]];
          t_half = x0 + (target - y0) * (x1 - x0) / (y1 - y0);
          break;
        }
      }
      const double tau = std::max(t_half / std::log(2.0), 1e-3 * x_span);
      return {a_inf, k, tau};
    }
    case FitModel::rabi: {
      std::size_t best = order.front();
      for (auto i : order) {
        if (std::abs(ys[i]) > std::abs(ys[best])) best = i;
      }
      double lo = ys[order.front()];
      return {lo, ys[best] - lo, std::max(xs[best], 1e-12 * std::max(1.0, x_span))};
    }
  }
  return {};
}

}  // namespace

double evaluate_model(FitModel model, std::span<const double> params, double x) {
  const auto n = parameter_count(model);
  if (params.size() != n) throw std::invalid_argument("evaluate_model: wrong parameter count");
  Eigen::VectorXd p(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) p[static_cast<Eigen::Index>(i)] = params[i];
  Eigen::VectorXd g(static_cast<Eigen::Index>(n));
  return model_and_gradient(model, p, x, g);
}

FitResult fit_curve(std::span<const double> xs, std::span<const double> ys, FitModel model,
                    std::span<const double> sigmas, std::span<const double> initial) {
  const auto np = parameter_count(model);
  const auto m = xs.size();
  if (m != ys.size()) throw std::invalid_argument("fit: xs and ys differ in length");
  if (m < 4 || m <= np) throw std::invalid_argument("fit: need at least 4 points");
  if (!sigmas.empty() && sigmas.size() != m) throw std::invalid_argument("fit: sigma length");
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw std::invalid_argument("fit: non-finite data");
    if (!sigmas.empty() && !(sigmas[i] > 0.0)) throw std::invalid_argument("fit: sigmas must be positive");
  }

  const auto P = static_cast<Eigen::Index>(np);
  const auto M = static_cast<Eigen::Index>(m);
  Eigen::VectorXd p(P);
  const auto guess = initial.empty() ? initial_guess(model, xs, ys)
                                     : std::vector<double>(initial.begin(), initial.end());
  if (guess.size() != np) throw std::invalid_argument("fit: initial guess has wrong size");
  for (Eigen::Index i = 0; i < P; ++i) p[i] = guess[static_cast<std::size_t>(i)];

  Eigen::MatrixXd J(M, P);
  Eigen::VectorXd r(M);
  auto evaluate = [&](const Eigen::VectorXd& q, bool jac) {
    Eigen::VectorXd grad(P);
    double cost = 0.0;
    for (Eigen::Index i = 0; i < M; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double w = sigmas.empty() ? 1.0 : 1.0 / sigmas[k];
      const double y = model_and_gradient(model, q, xs[k], grad);
      r[i] = w * (ys[k] - y);
      if (jac) J.row(i) = w * grad.transpose();
      cost += r[i] * r[i];
    }
    return cost;
  };

  double cost = evaluate(p, true);
  double lambda = 1e-3;
  int iter = 0;
  bool converged = false;
  constexpr int max_iter = 500;
  for (; iter < max_iter; ++iter) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd Jtr = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd A = JtJ;
      for (Eigen::Index i = 0; i < P; ++i) A(i, i) += lambda * std::max(JtJ(i, i), 1e-300);
      const Eigen::VectorXd step = A.ldlt().solve(Jtr);
      const Eigen::VectorXd trial = p + step;
      const double trial_cost = evaluate(trial, false);
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        const double rel_step = step.norm() / std::max(p.norm(), 1e-300);
        const double rel_cost = (cost - trial_cost) / std::max(cost, 1e-300);
        p = trial;
        cost = evaluate(p, true);
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (rel_step < 1e-12 || rel_cost < 1e-15 || cost == 0.0) converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) {
      // no downhill step at any damping: a minimum within round-off
      converged = lambda > 1e10;
      break;
    }
    if (converged) break;
  }
  if (!converged || !p.allFinite()) {
    char msg[256];
    std::snprintf(msg, sizeof msg,
                  "fit did not converge after %d iterations (cost %.6g, damping %.3g)", iter, cost,
                  lambda);
    throw FitError(msg);
  }

  FitResult result;
  result.iterations = iter;
  result.params.assign(p.data(), p.data() + P);
  const double dof = static_cast<double>(m - np);
  const double s2 = sigmas.empty() ? cost / dof : std::max(cost / dof, 1.0);
  const Eigen::MatrixXd cov = (J.transpose() * J).inverse() * s2;
  for (Eigen::Index i = 0; i < P; ++i) result.errors.push_back(std::sqrt(std::max(cov(i, i), 0.0)));
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = ys[i] - evaluate_model(model, result.params, xs[i]);
    rss += d * d;
  }
  result.residual_rms = std::sqrt(rss / static_cast<double>(m));
  return result;
}

}  // namespace esr
