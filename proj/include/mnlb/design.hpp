#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "mnlb/estimation.hpp"

namespace mnlb {

/// Sparse probability weights over an indexed arm set.
struct DesignWeights {
  std::vector<std::pair<int, double>> support;  // (index, weight), weight > 0

  void validate(int set_size) const;
  double weight_of(int index) const;
  std::vector<double> dense(int set_size) const;
};

struct GOptimalOptions {
  double epsilon = 0.01;  // certificate slack: stop at (1 + epsilon) * rank
  int max_iters = 1000;
};

struct GOptimalResult {
  DesignWeights weights;
  double certificate;  // max_x ||x||^2_{V(pi)^{-1}}, measured in the span
  int rank;
  int iterations;
  bool converged;
};

/// Frank-Wolfe (Kiefer-Wolfowitz) G-optimal design. Rank-deficient sets are
/// handled in their span; an all-zero set degenerates to uniform weights.
GOptimalResult g_optimal(const std::vector<VectorXd>& points,
                         const GOptimalOptions& opts = {});
GOptimalResult g_optimal(const ArmSet& arms, const GOptimalOptions& opts = {});

/// One directionally scaled image of an arm:
/// (A(x, theta_hat)^{1/2} e_i kron x) / sqrt(B(x)).
struct ScaledArm {
  VectorXd vec;
  int arm_index;
  int direction;  // 1..K
};

/// The K scaled vector sets F_1..F_K for an arm set under theta_hat and
/// per-arm scaling factors; result[i-1][j] is arm j's direction-i image.
std::vector<std::vector<ScaledArm>> build_scaled_sets(
    const ArmSet& arms, const ModelParams& theta_hat,
    std::span<const double> b_values);

/// Anything that can turn a presented arm set into sampling weights.
class ArmSelectionPolicy {
 public:
  virtual ~ArmSelectionPolicy() = default;
  virtual DesignWeights weights_for(const ArmSet& arms) const = 0;
};

class UniformPolicy final : public ArmSelectionPolicy {
 public:
  DesignWeights weights_for(const ArmSet& arms) const override;
};

/// Computes a fresh G-optimal design of every presented set (with a content
/// cache, since bandit loops present near-identical sets repeatedly).
class GOptimalPerSetPolicy final : public ArmSelectionPolicy {
 public:
  explicit GOptimalPerSetPolicy(GOptimalOptions opts = {}) : opts_(opts) {}
  DesignWeights weights_for(const ArmSet& arms) const override;

 private:
  GOptimalOptions opts_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::uint64_t, DesignWeights> cache_;
};

/// Design learned from sampled context sets. For a presented set it blends,
/// half and half, the G-optimal design of that set with a bootstrap-pooled
/// G-optimal design whose atoms are reassigned to the nearest presented
/// point in the pooled information metric. The first component guarantees
/// pi >= pi_G / 2 on every set.
class DistributionalDesign {
 public:
  DistributionalDesign(std::vector<std::vector<VectorXd>> sample_sets,
                       const GOptimalOptions& opts, Rng rng);

  DesignWeights weights_for(const std::vector<VectorXd>& set) const;
  const MatrixXd& pooled_information() const { return pooled_info_; }
  bool degenerate() const { return degenerate_; }

 private:
  std::vector<VectorXd> atom_points_;
  std::vector<double> atom_weights_;
  MatrixXd pooled_info_;
  Eigen::LLT<MatrixXd> pooled_llt_;
  GOptimalOptions opts_;
  bool degenerate_ = false;
};

/// Spec'd wrapper: a distributional design over raw arm sets.
class RawDistributionalPolicy final : public ArmSelectionPolicy {
 public:
  RawDistributionalPolicy(const std::vector<ArmSet>& context_samples,
                          const GOptimalOptions& opts, Rng rng);
  DesignWeights weights_for(const ArmSet& arms) const override;
  const DistributionalDesign& design() const { return design_; }

 private:
  DistributionalDesign design_;
};

std::shared_ptr<RawDistributionalPolicy> distributional_design(
    const std::vector<ArmSet>& context_samples, const GOptimalOptions& opts,
    Rng rng);

/// B(x) evaluated against a frozen checkpoint (gamma, kappa, V).
struct SelfConcordanceScaler {
  double gamma;
  double kappa;
  DesignMatrixV v;
  double S;
  ScalingVariant variant;

  double b(const VectorXd& x) const {
    return scaling_factor(x, gamma, kappa, v, S, variant);
  }
};

/// Uniform mixture of K+1 distributional designs: one per scaled direction
/// plus one over raw sets. Presented sets are scaled with the checkpoint's
/// theta_hat and B before each directional component is consulted.
class MnlMixturePolicy final : public ArmSelectionPolicy {
 public:
  MnlMixturePolicy(const std::vector<ArmSet>& pruned_sets,
                   ModelParams theta_hat, SelfConcordanceScaler scaler,
                   const GOptimalOptions& opts, Rng rng);

  DesignWeights weights_for(const ArmSet& arms) const override;

  int component_count() const { return theta_hat_.K + 1; }
  double mixing_weight() const { return 1.0 / (theta_hat_.K + 1); }
  const DistributionalDesign& component(int i) const { return components_[i]; }

 private:
  ModelParams theta_hat_;
  SelfConcordanceScaler scaler_;
  GOptimalOptions opts_;
  std::vector<DistributionalDesign> components_;  // [0]=raw, [i]=direction i
  mutable std::mutex mu_;
  mutable std::unordered_map<std::uint64_t, DesignWeights> cache_;
};

std::shared_ptr<MnlMixturePolicy> mnl_design_policy(
    const std::vector<ArmSet>& pruned_sets, const ModelParams& theta_hat,
    const SelfConcordanceScaler& scaler, const GOptimalOptions& opts, Rng rng);

/// Draw an arm index from the policy's weights for this set.
int sample_arm(const ArmSelectionPolicy& policy, const ArmSet& arms, Rng& rng);

}  // namespace mnlb
