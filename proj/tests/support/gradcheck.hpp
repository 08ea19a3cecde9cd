#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "burstnet/network_spec.hpp"
#include "burstnet/tensor.hpp"

namespace burstnet::testing {

inline constexpr double kFdStep = 1e-3;
inline constexpr double kFdTolerance = 1e-4;

// ||a - n|| / max(||a||, ||n||); 0 when both vanish.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

// Central differences of f with respect to every element of t (perturbed in place
// and restored).
std::vector<double> numeric_gradient(Tensor<double>& t, const std::function<double()>& f, double h = kFdStep);

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0);

// Values at least `margin` away from zero.
Tensor<double> random_away_from_zero(Shape shape, std::mt19937_64& rng, double margin);

// A shuffled set of values whose pairwise gaps exceed `gap`.
Tensor<double> random_distinct(Shape shape, std::mt19937_64& rng, double gap);

double dot(std::span<const double> a, std::span<const double> b);

struct CheckResult {
  std::string name;
  std::size_t instances = 0;
  double worst_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t kink_skipped = 0;  // network check only: perturbation changed the active set

  bool passed(double tol = kFdTolerance) const { return instances > 0 && worst_error < tol; }
};

// One result per numeric-core op (each input and parameter gradient).
std::vector<CheckResult> check_all_ops(std::uint64_t seed, std::size_t instances);

// A 1-block network: stem, one inception-res block, avgpool, fc.
NetworkSpec toy_network_spec(bool downsample, std::size_t num_classes = 3, std::size_t length = 16);

// Whole-network check over every parameter and input element. Coordinates
// whose +-h perturbation moves a ReLU or maxpool decision are counted in
// kink_skipped and excluded.
CheckResult check_toy_network(std::uint64_t seed, std::size_t instances);

}  // namespace burstnet::testing
