#include "gridmap/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

void check_class(std::size_t k, std::size_t n) {
  if (k >= n)
    fail(ErrorCode::InvalidArgument, "class index " + std::to_string(k) + " out of range for " + std::to_string(n) +
                                         " classes");
}

void check_u(const LossInputs& in) {
  if (in.u.size() != in.u_star.size())
    fail(ErrorCode::InvalidArgument, "u has " + std::to_string(in.u.size()) + " components but u* has " +
                                         std::to_string(in.u_star.size()));
}

void check_distribution(std::span<const double> p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "class probabilities must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) fail(ErrorCode::InvalidArgument, "class probabilities sum to " + std::to_string(sum));
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double shift = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - shift);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> softmax_jacobian(std::span<const double> logits) {
  const auto p = softmax(logits);
  const std::size_t k = p.size();
  std::vector<double> jac(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) jac[i * k + j] = p[i] * ((i == j ? 1.0 : 0.0) - p[j]);
  return jac;
}

double cross_entropy(std::span<const double> p, std::size_t p_star) {
  check_class(p_star, p.size());
  return -std::log(std::max(p[p_star], kProbabilityFloor));
}

std::vector<double> softmax_cross_entropy_gradient(std::span<const double> logits, std::size_t p_star) {
  check_class(p_star, logits.size());
  auto grad = softmax(logits);
  // Inside the clamp the loss is flat.
  if (grad[p_star] <= kProbabilityFloor) return std::vector<double>(grad.size(), 0.0);
  grad[p_star] -= 1.0;
  return grad;
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double smooth_l1_gradient(double x) {
  if (std::abs(x) < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}

double smooth_l1_sum(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "smooth L1 operands differ in size");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += smooth_l1(a[i] - b[i]);
  return sum;
}

LossTerms multitask_loss(const LossInputs& in) {
  check_u(in);
  check_distribution(in.p);
  LossTerms t;
  t.cls = cross_entropy(in.p, in.p_star);
  if (in.p_star != in.background_class) {
    t.loc1 = in.lambda1 * smooth_l1_sum(in.v, in.v_star);
    t.loc2 = in.lambda2 * smooth_l1_sum(in.u, in.u_star);
  }
  t.total = t.cls + t.loc1 + t.loc2;
  return t;
}

LossTerms multitask_loss_from_logits(std::span<const double> logits, const LossInputs& in, LossGradient* gradient) {
  LossInputs with_p = in;
  with_p.p = softmax(logits);
  LossTerms t = multitask_loss(with_p);
  if (gradient) {
    gradient->d_logits = softmax_cross_entropy_gradient(logits, in.p_star);
    gradient->d_v.fill(0.0);
    gradient->d_u.assign(in.u.size(), 0.0);
    if (in.p_star != in.background_class) {
      for (std::size_t i = 0; i < 4; ++i) gradient->d_v[i] = in.lambda1 * smooth_l1_gradient(in.v[i] - in.v_star[i]);
      for (std::size_t i = 0; i < in.u.size(); ++i)
        gradient->d_u[i] = in.lambda2 * smooth_l1_gradient(in.u[i] - in.u_star[i]);
    }
  }
  return t;
}

BatchLoss batch_multitask_loss(std::span<const LossInputs> batch) {
  BatchLoss out;
  out.samples = batch.size();
  double cls = 0.0, loc1 = 0.0, loc2 = 0.0;
  for (const auto& in : batch) {
    LossTerms t = multitask_loss(in);
    cls += t.cls;
    loc1 += t.loc1;
    loc2 += t.loc2;
    if (in.p_star != in.background_class) ++out.foreground;
  }
  if (out.samples) out.terms.cls = cls / double(out.samples);
  if (out.foreground) {
    out.terms.loc1 = loc1 / double(out.foreground);
    out.terms.loc2 = loc2 / double(out.foreground);
  }
  out.terms.total = out.terms.cls + out.terms.loc1 + out.terms.loc2;
  return out;
}

}  // namespace gridmap
