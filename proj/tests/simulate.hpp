#ifndef MONOALIGN_TESTS_SIMULATE_HPP
#define MONOALIGN_TESTS_SIMULATE_HPP

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "monoalign/experiment.hpp"

namespace fixture {

struct SimulatedExperiment {
  std::vector<monoalign::TaskItem> tasks;
  std::vector<monoalign::Response> responses;
};

/// Default 9 x 24 design with invented patients. A rater picks the constrained
/// side with probability logistic(alpha_pair + beta * shap_l1).
inline std::vector<monoalign::PairPatients> synthetic_pairs(const monoalign::ExperimentDesign& design,
                                                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> l1(0.0, 3.0);
  std::vector<monoalign::PairPatients> pairs;
  for (int p = 0; p < design.n_pairs; ++p) {
    monoalign::PairPatients pp;
    pp.pair_id = 100 + 7 * p;
    pp.pair_index = p;
    for (int i = 0; i < design.patients_per_pair; ++i) {
      pp.row_ids.push_back("p" + std::to_string(p) + "-" + std::to_string(i));
      pp.shap_l1.push_back(l1(rng));
    }
    pairs.push_back(std::move(pp));
  }
  return pairs;
}

inline SimulatedExperiment simulate_choices(std::uint64_t seed, double beta) {
  monoalign::ExperimentDesign design;
  design.seed = seed;
  std::mt19937_64 rng(seed * 7919 + 3);
  SimulatedExperiment sim;
  sim.tasks = monoalign::assign_tasks(synthetic_pairs(design, rng), design);
  std::normal_distribution<double> effect(-0.4, 0.3);
  std::vector<double> alpha(static_cast<std::size_t>(design.n_pairs));
  for (auto& a : alpha) a = effect(rng);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> confidence(1, 5);
  for (const auto& t : sim.tasks) {
    const double eta = alpha[static_cast<std::size_t>(t.pair_index)] + beta * t.shap_l1;
    const bool pick_constrained = u(rng) < 1.0 / (1.0 + std::exp(-eta));
    const bool left_is_constrained = t.left_model == monoalign::kConstrained;
    sim.responses.push_back({t.task_id, pick_constrained == left_is_constrained ? "left" : "right", confidence(rng),
                             "2026-01-01T00:00:00Z"});
  }
  return sim;
}

}  // namespace fixture

#endif  // MONOALIGN_TESTS_SIMULATE_HPP
