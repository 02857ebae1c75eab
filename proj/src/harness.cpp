#include "mnlb/harness.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace mnlb {

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::bmnl:
      return "bmnl";
    case Algorithm::rsmnl:
      return "rsmnl";
    case Algorithm::baseline:
      return "baseline";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
  if (name == "bmnl") return Algorithm::bmnl;
  if (name == "rsmnl") return Algorithm::rsmnl;
  if (name == "baseline") return Algorithm::baseline;
  return std::nullopt;
}

std::vector<RunResult> run_experiment(Algorithm algo,
                                      const EnvironmentSpec& spec, long T,
                                      int M, const AlgoConfig& config,
                                      int n_seeds, std::uint64_t master_seed,
                                      int jobs) {
  if (n_seeds < 1) {
    throw std::invalid_argument("run_experiment: n_seeds >= 1 required");
  }
  if (algo == Algorithm::bmnl &&
      spec.kind == EnvironmentKind::adversarial_fresh) {
    throw std::invalid_argument(
        "run_experiment: the batched algorithm requires stochastic contexts");
  }
  Environment env(spec);  // one instance, shared read-only across seeds
  int batches = M > 0 ? M : default_batch_count(T);
  Rng master(master_seed);

  std::vector<RunResult> results(static_cast<std::size_t>(n_seeds));
  auto one_run = [&](int i) {
    RunResult& slot = results[static_cast<std::size_t>(i)];
    Rng run_rng = master.fork(static_cast<std::uint64_t>(i));
    slot.seed_index = i;
    slot.seed = run_rng.seed();
    try {
      RegretTrace trace;
      switch (algo) {
        case Algorithm::bmnl:
          trace = bmnl_run(env, T, batches, spec.rho, spec.S(), config,
                           run_rng);
          break;
        case Algorithm::rsmnl:
          trace = rsmnl_run(env, T, spec.rho, spec.S(), config.delta, config,
                            run_rng);
          break;
        case Algorithm::baseline:
          trace = baseline_per_round_run(env, T, spec.rho, spec.S(),
                                         config.delta, config, run_rng);
          break;
      }
      trace.validate(spec.R());
      slot.trace = std::move(trace);
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  };

  int workers = std::max(1, std::min(jobs, n_seeds));
  if (workers == 1) {
    for (int i = 0; i < n_seeds; ++i) one_run(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n_seeds; i = next.fetch_add(1)) {
          one_run(i);
        }
      });
    }
    for (auto& th : threads) th.join();
  }
  return results;
}

std::vector<AggregateRow> aggregate(const std::vector<RegretTrace>& traces,
                                    std::vector<long> checkpoints) {
  if (traces.empty()) {
    throw std::invalid_argument("aggregate: no traces");
  }
  const std::size_t T = traces.front().rows.size();
  for (const RegretTrace& t : traces) {
    if (t.rows.size() != T) {
      throw std::invalid_argument("aggregate: traces of unequal length");
    }
  }
  if (checkpoints.empty()) {
    checkpoints.reserve(T);
    for (std::size_t t = 1; t <= T; ++t) {
      checkpoints.push_back(static_cast<long>(t));
    }
  }

  const double n = static_cast<double>(traces.size());
  std::vector<AggregateRow> out;
  out.reserve(checkpoints.size());

  // cumulative switch counts per trace, computed once
  std::vector<std::vector<long>> cum_switches(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    cum_switches[i].reserve(T);
    long c = 0;
    for (const TraceRow& row : traces[i].rows) {
      if (row.is_switch) ++c;
      cum_switches[i].push_back(c);
    }
  }

  for (long round : checkpoints) {
    if (round < 1 || static_cast<std::size_t>(round) > T) {
      throw std::invalid_argument("aggregate: checkpoint out of range");
    }
    std::size_t idx = static_cast<std::size_t>(round) - 1;
    double r_sum = 0.0, s_sum = 0.0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      r_sum += traces[i].rows[idx].cum_regret;
      s_sum += static_cast<double>(cum_switches[i][idx]);
    }
    double r_mean = r_sum / n;
    double s_mean = s_sum / n;
    // two-pass population variance: exact zero for identical traces
    double r_var = 0.0, s_var = 0.0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      double rd = traces[i].rows[idx].cum_regret - r_mean;
      double sd = static_cast<double>(cum_switches[i][idx]) - s_mean;
      r_var += rd * rd;
      s_var += sd * sd;
    }
    r_var /= n;
    s_var /= n;
    double r_std = std::sqrt(r_var);
    out.push_back({round, r_mean, r_std, r_mean - 2.0 * r_std,
                   r_mean + 2.0 * r_std, s_mean, std::sqrt(s_var)});
  }
  return out;
}

}  // namespace mnlb
