#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace gridmap {

inline constexpr double kProbabilityFloor = 1e-12;

/// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> logits);
/// Row-major K×K Jacobian ∂p_i/∂z_j = p_i(δ_ij − p_j).
std::vector<double> softmax_jacobian(std::span<const double> logits);

/// −log p[p_star], with p clamped from below at kProbabilityFloor.
double cross_entropy(std::span<const double> p, std::size_t p_star);
/// ∂/∂logits of cross_entropy(softmax(logits), p_star).
std::vector<double> softmax_cross_entropy_gradient(std::span<const double> logits, std::size_t p_star);

double smooth_l1(double x);
double smooth_l1_gradient(double x);
/// Σ smooth_l1(a_i − b_i); sizes must match.
double smooth_l1_sum(std::span<const double> a, std::span<const double> b);

struct LossInputs {
  std::vector<double> p;  ///< class distribution over K+1 classes
  std::size_t p_star = 0;
  std::array<double, 4> v{};
  std::array<double, 4> v_star{};
  std::vector<double> u;
  std::vector<double> u_star;
  double lambda1 = 2.0;
  double lambda2 = 2.0;
  std::size_t background_class = 0;
};

/// loc1 and loc2 are the weighted contributions λ₁·L_loc,1 and λ₂·L_loc,2, so
/// total = cls + loc1 + loc2. Both localization terms vanish for background.
struct LossTerms {
  double total = 0.0;
  double cls = 0.0;
  double loc1 = 0.0;
  double loc2 = 0.0;
};

LossTerms multitask_loss(const LossInputs& in);

struct LossGradient {
  std::vector<double> d_logits;
  std::array<double, 4> d_v{};
  std::vector<double> d_u;
};

/// Loss and its gradient with the class distribution given as logits.
/// `in.p` is ignored and recomputed from `logits`.
LossTerms multitask_loss_from_logits(std::span<const double> logits, const LossInputs& in,
                                     LossGradient* gradient = nullptr);

struct BatchLoss {
  LossTerms terms;
  std::size_t samples = 0;
  std::size_t foreground = 0;
};

/// Classification averaged over all samples, localization over foreground samples.
BatchLoss batch_multitask_loss(std::span<const LossInputs> batch);

}  // namespace gridmap
