#include "mnlb/design.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace mnlb {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::uint64_t hash_vector(const VectorXd& v, std::uint64_t h) {
  h = hash_bytes(v.data(), sizeof(double) * v.size(), h);
  return hash_mix(h, static_cast<std::uint64_t>(v.size()));
}

std::uint64_t hash_arm_set(const ArmSet& arms) {
  std::uint64_t h = 0x811C9DC5u;
  for (const Arm& arm : arms) h = hash_vector(arm.x(), h);
  return hash_mix(h, arms.size());
}

DesignWeights sparsify(const std::vector<double>& w) {
  double total = 0.0;
  for (double wi : w) total += wi;
  DesignWeights out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 1e-12 * std::max(1.0, total)) {
      out.support.emplace_back(static_cast<int>(i), w[i] / total);
    }
  }
  return out;
}

DesignWeights uniform_weights(int n) {
  DesignWeights out;
  out.support.reserve(n);
  for (int i = 0; i < n; ++i) out.support.emplace_back(i, 1.0 / n);
  return out;
}

}  // namespace

void DesignWeights::validate(int set_size) const {
  double total = 0.0;
  std::vector<char> seen(set_size, 0);
  for (const auto& [idx, wt] : support) {
    if (idx < 0 || idx >= set_size) {
      throw std::invalid_argument("DesignWeights: index out of range");
    }
    if (seen[idx]) throw std::invalid_argument("DesignWeights: duplicate index");
    seen[idx] = 1;
    if (!(wt > 0.0)) throw std::invalid_argument("DesignWeights: nonpositive weight");
    total += wt;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("DesignWeights: weights do not sum to 1");
  }
}

double DesignWeights::weight_of(int index) const {
  for (const auto& [idx, wt] : support) {
    if (idx == index) return wt;
  }
  return 0.0;
}

std::vector<double> DesignWeights::dense(int set_size) const {
  std::vector<double> out(set_size, 0.0);
  for (const auto& [idx, wt] : support) out[static_cast<std::size_t>(idx)] = wt;
  return out;
}

GOptimalResult g_optimal(const std::vector<VectorXd>& points,
                         const GOptimalOptions& opts) {
  require(!points.empty(), "g_optimal: empty point set");
  const int n = static_cast<int>(points.size());
  const int dim = static_cast<int>(points.front().size());
  for (const VectorXd& p : points) {
    require(p.size() == dim, "g_optimal: mixed dimensions");
  }

  MatrixXd X(dim, n);
  for (int i = 0; i < n; ++i) X.col(i) = points[static_cast<std::size_t>(i)];

  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  if (rank == 0) {
    return {uniform_weights(n), 0.0, 0, 0, true};
  }
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(dim, rank);
  MatrixXd y = q.transpose() * X;  // rank x n, spans the working space

  // Greedy volumetric warm start: repeatedly take the point with the largest
  // leverage against what has been selected so far.
  MatrixXd m = 1e-12 * MatrixXd::Identity(rank, rank);
  std::vector<char> picked(static_cast<std::size_t>(n), 0);
  int n_picked = 0;
  const int target = std::min(2 * rank, n);
  for (int round = 0; round < target; ++round) {
    Eigen::LLT<MatrixXd> llt(m);
    int best = -1;
    double best_val = -1.0;
    for (int i = 0; i < n; ++i) {
      double val = y.col(i).dot(llt.solve(y.col(i)));
      if (val > best_val) {
        best_val = val;
        best = i;
      }
    }
    if (!picked[static_cast<std::size_t>(best)]) {
      picked[static_cast<std::size_t>(best)] = 1;
      ++n_picked;
    }
    m.noalias() += y.col(best) * y.col(best).transpose();
  }

  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (picked[static_cast<std::size_t>(i)]) w[static_cast<std::size_t>(i)] = 1.0 / n_picked;
  }

  // Frank-Wolfe with the closed-form D-optimal step.
  double certificate = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iter = 0;
  auto leverages = [&](const std::vector<double>& weights, int& argmax) {
    MatrixXd v = MatrixXd::Zero(rank, rank);
    for (int i = 0; i < n; ++i) {
      if (weights[static_cast<std::size_t>(i)] > 0.0) {
        v.noalias() += weights[static_cast<std::size_t>(i)] * y.col(i) * y.col(i).transpose();
      }
    }
    Eigen::LLT<MatrixXd> llt(v);
    double gmax = -1.0;
    argmax = 0;
    for (int i = 0; i < n; ++i) {
      double g = y.col(i).dot(llt.solve(y.col(i)));
      if (g > gmax) {
        gmax = g;
        argmax = i;
      }
    }
    return gmax;
  };

  for (; iter < opts.max_iters; ++iter) {
    int j = 0;
    certificate = leverages(w, j);
    if (certificate <= (1.0 + opts.epsilon) * rank) {
      converged = true;
      break;
    }
    double alpha = (certificate / rank - 1.0) / (certificate - 1.0);
    for (double& wi : w) wi *= 1.0 - alpha;
    w[static_cast<std::size_t>(j)] += alpha;
  }
  if (!converged) {
    int j = 0;
    certificate = leverages(w, j);
    converged = certificate <= (1.0 + opts.epsilon) * rank;
  }

  return {sparsify(w), certificate, rank, iter, converged};
}

GOptimalResult g_optimal(const ArmSet& arms, const GOptimalOptions& opts) {
  std::vector<VectorXd> points;
  points.reserve(arms.size());
  for (const Arm& arm : arms) points.push_back(arm.x());
  return g_optimal(points, opts);
}

std::vector<std::vector<ScaledArm>> build_scaled_sets(
    const ArmSet& arms, const ModelParams& theta_hat,
    std::span<const double> b_values) {
  require(!arms.empty(), "build_scaled_sets: empty arm set");
  require(b_values.size() == arms.size(),
          "build_scaled_sets: one B value per arm required");
  const int K = theta_hat.K;
  std::vector<std::vector<ScaledArm>> sets(static_cast<std::size_t>(K));
  for (auto& s : sets) s.reserve(arms.size());
  for (std::size_t j = 0; j < arms.size(); ++j) {
    require(b_values[j] >= 1.0, "build_scaled_sets: B must be >= 1");
    MatrixXd root = sqrt_psd(link_gradient(arms[j], theta_hat));
    double scale = 1.0 / std::sqrt(b_values[j]);
    for (int i = 0; i < K; ++i) {
      sets[static_cast<std::size_t>(i)].push_back(
          {kron_vec(root.col(i), arms[j].x()) * scale,
           static_cast<int>(j), i + 1});
    }
  }
  return sets;
}

DesignWeights UniformPolicy::weights_for(const ArmSet& arms) const {
  require(!arms.empty(), "UniformPolicy: empty arm set");
  return uniform_weights(static_cast<int>(arms.size()));
}

DesignWeights GOptimalPerSetPolicy::weights_for(const ArmSet& arms) const {
  require(!arms.empty(), "GOptimalPerSetPolicy: empty arm set");
  std::uint64_t key = hash_arm_set(arms);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  DesignWeights w = g_optimal(arms, opts_).weights;
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(key, w);
  return w;
}

DistributionalDesign::DistributionalDesign(
    std::vector<std::vector<VectorXd>> sample_sets, const GOptimalOptions& opts,
    Rng rng)
    : opts_(opts) {
  require(!sample_sets.empty(), "DistributionalDesign: no sample sets");
  for (const auto& set : sample_sets) {
    require(!set.empty(), "DistributionalDesign: empty sample set");
  }

  // Bootstrap resample of whole sets, then pool their points (deduplicated
  // bit-exactly; duplicate atoms carry no extra design information).
  const std::size_t n_sets = sample_sets.size();
  std::vector<VectorXd> pooled;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
  for (std::size_t s = 0; s < n_sets; ++s) {
    const auto& set = sample_sets[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(n_sets)))];
    for (const VectorXd& v : set) {
      std::uint64_t h = hash_vector(v, 0x811C9DC5u);
      auto& bucket = seen[h];
      bool dup = false;
      for (std::size_t idx : bucket) {
        if (pooled[idx] == v) {
          dup = true;
          break;
        }
      }
      if (!dup) {
        bucket.push_back(pooled.size());
        pooled.push_back(v);
      }
    }
  }

  GOptimalResult boot = g_optimal(pooled, opts_);
  degenerate_ = boot.rank == 0;
  const int dim = static_cast<int>(pooled.front().size());
  pooled_info_ = MatrixXd::Zero(dim, dim);
  for (const auto& [idx, wt] : boot.weights.support) {
    const VectorXd& u = pooled[static_cast<std::size_t>(idx)];
    atom_points_.push_back(u);
    atom_weights_.push_back(wt);
    pooled_info_.noalias() += wt * u * u.transpose();
  }
  pooled_llt_.compute(pooled_info_ + 1e-10 * MatrixXd::Identity(dim, dim));
}

DesignWeights DistributionalDesign::weights_for(
    const std::vector<VectorXd>& set) const {
  require(!set.empty(), "DistributionalDesign: empty presented set");
  const int n = static_cast<int>(set.size());
  std::vector<double> w = g_optimal(set, opts_).weights.dense(n);
  for (double& wi : w) wi *= 0.5;

  // Restrict the pooled design to the presented set: each atom's mass goes to
  // the presented point nearest in the pooled information metric.
  for (std::size_t a = 0; a < atom_points_.size(); ++a) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      VectorXd diff = atom_points_[a] - set[static_cast<std::size_t>(j)];
      double dist = diff.dot(pooled_llt_.solve(diff));
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    w[static_cast<std::size_t>(best)] += 0.5 * atom_weights_[a];
  }
  return sparsify(w);
}

RawDistributionalPolicy::RawDistributionalPolicy(
    const std::vector<ArmSet>& context_samples, const GOptimalOptions& opts,
    Rng rng)
    : design_(
          [&] {
            require(!context_samples.empty(),
                    "distributional_design: no context samples");
            std::vector<std::vector<VectorXd>> sets;
            sets.reserve(context_samples.size());
            for (const ArmSet& arms : context_samples) {
              std::vector<VectorXd> v;
              v.reserve(arms.size());
              for (const Arm& arm : arms) v.push_back(arm.x());
              sets.push_back(std::move(v));
            }
            return sets;
          }(),
          opts, rng) {}

DesignWeights RawDistributionalPolicy::weights_for(const ArmSet& arms) const {
  require(!arms.empty(), "RawDistributionalPolicy: empty arm set");
  std::vector<VectorXd> v;
  v.reserve(arms.size());
  for (const Arm& arm : arms) v.push_back(arm.x());
  return design_.weights_for(v);
}

std::shared_ptr<RawDistributionalPolicy> distributional_design(
    const std::vector<ArmSet>& context_samples, const GOptimalOptions& opts,
    Rng rng) {
  return std::make_shared<RawDistributionalPolicy>(context_samples, opts, rng);
}

MnlMixturePolicy::MnlMixturePolicy(const std::vector<ArmSet>& pruned_sets,
                                   ModelParams theta_hat,
                                   SelfConcordanceScaler scaler,
                                   const GOptimalOptions& opts, Rng rng)
    : theta_hat_(std::move(theta_hat)),
      scaler_(std::move(scaler)),
      opts_(opts) {
  require(!pruned_sets.empty(), "mnl_design_policy: no context sets");
  const int K = theta_hat_.K;

  std::vector<std::vector<VectorXd>> raw;
  raw.reserve(pruned_sets.size());
  std::vector<std::vector<std::vector<VectorXd>>> scaled(
      static_cast<std::size_t>(K));
  for (const ArmSet& set : pruned_sets) {
    require(!set.empty(), "mnl_design_policy: empty context set");
    std::vector<VectorXd> v;
    std::vector<double> b;
    v.reserve(set.size());
    b.reserve(set.size());
    for (const Arm& arm : set) {
      v.push_back(arm.x());
      b.push_back(scaler_.b(arm.x()));
    }
    raw.push_back(std::move(v));
    auto fsets = build_scaled_sets(set, theta_hat_, b);
    for (int i = 0; i < K; ++i) {
      std::vector<VectorXd> fi;
      fi.reserve(fsets[static_cast<std::size_t>(i)].size());
      for (const ScaledArm& sa : fsets[static_cast<std::size_t>(i)]) {
        fi.push_back(sa.vec);
      }
      scaled[static_cast<std::size_t>(i)].push_back(std::move(fi));
    }
  }

  components_.reserve(static_cast<std::size_t>(K) + 1);
  components_.emplace_back(std::move(raw), opts_, rng.fork(0));
  for (int i = 0; i < K; ++i) {
    components_.emplace_back(std::move(scaled[static_cast<std::size_t>(i)]),
                             opts_, rng.fork(static_cast<std::uint64_t>(i) + 1));
    if (components_.back().degenerate()) {
      std::cerr << "mnlb: warning: scaled design direction " << i + 1
                << " is degenerate; component falls back to uniform\n";
    }
  }
}

DesignWeights MnlMixturePolicy::weights_for(const ArmSet& arms) const {
  require(!arms.empty(), "MnlMixturePolicy: empty arm set");
  std::uint64_t key = hash_arm_set(arms);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }

  const int K = theta_hat_.K;
  const int n = static_cast<int>(arms.size());
  std::vector<VectorXd> raw;
  std::vector<double> b;
  raw.reserve(arms.size());
  b.reserve(arms.size());
  for (const Arm& arm : arms) {
    raw.push_back(arm.x());
    b.push_back(scaler_.b(arm.x()));
  }
  auto fsets = build_scaled_sets(arms, theta_hat_, b);

  const double mix = mixing_weight();
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  auto blend = [&](const DesignWeights& dw) {
    for (const auto& [idx, wt] : dw.support) {
      w[static_cast<std::size_t>(idx)] += mix * wt;
    }
  };
  blend(components_[0].weights_for(raw));
  for (int i = 0; i < K; ++i) {
    std::vector<VectorXd> fi;
    fi.reserve(arms.size());
    for (const ScaledArm& sa : fsets[static_cast<std::size_t>(i)]) {
      fi.push_back(sa.vec);
    }
    blend(components_[static_cast<std::size_t>(i) + 1].weights_for(fi));
  }

  DesignWeights out = sparsify(w);
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(key, out);
  return out;
}

std::shared_ptr<MnlMixturePolicy> mnl_design_policy(
    const std::vector<ArmSet>& pruned_sets, const ModelParams& theta_hat,
    const SelfConcordanceScaler& scaler, const GOptimalOptions& opts, Rng rng) {
  return std::make_shared<MnlMixturePolicy>(pruned_sets, theta_hat, scaler,
                                            opts, rng);
}

int sample_arm(const ArmSelectionPolicy& policy, const ArmSet& arms, Rng& rng) {
  require(!arms.empty(), "sample_arm: empty arm set");
  DesignWeights w = policy.weights_for(arms);
  w.validate(static_cast<int>(arms.size()));
  return rng.categorical(w.dense(static_cast<int>(arms.size())));
}

}  // namespace mnlb
