// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

#include "shellopt/optimize.hpp"

namespace shellopt {

/// Optional overrides shared by the built-in benchmark problems.
struct BenchmarkOverrides {
  double alpha = 1000.0;
  int max_iter = 100;
  double kkt_tol = -1.0;   // negative: per-benchmark default
  int resolution = -1;     // knot spans per direction; negative: default
  bool rotational_nu_squared = false;
};

/// A ready-to-run shape optimization problem: the assembly, its design
/// space, constraints, bounds, and initial point.
struct Benchmark {
  std::string name;
  std::unique_ptr<NonMatchingAssembly> assembly;
  std::unique_ptr<DesignSpace> design;
  OptimizationProblem problem;
  VecX z0;
  double energy_reference = 1.0;
};

/// Flat T-beam: one design variable, the horizontal web position.
Benchmark make_tbeam_flat(const BenchmarkOverrides& ov = {});

/// Curved-top T-beam: four horizontal profile variables plus the two
/// vertical extent variables of the web, with volume and T-junction
/// retention constraints.
Benchmark make_tbeam_curved(const BenchmarkOverrides& ov = {});

/// Quarter tube under follower pressure: two FFD blocks with 25 design
/// variables each driving the upper and lower patch pairs.
Benchmark make_tube(const BenchmarkOverrides& ov = {});

Benchmark make_benchmark(const std::string& name, const BenchmarkOverrides& ov = {});

} // namespace shellopt
