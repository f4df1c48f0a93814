// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "shellopt/benchmarks.hpp"

namespace shellopt {

/// Merge benchmark overrides from a JSON config file (fields: alpha,
/// max_iter, kkt_tol, resolution, rotational_variant).
BenchmarkOverrides overrides_from_config(const std::string& path,
                                         BenchmarkOverrides base = {});

/// Append one line-delimited JSON record of an accepted iterate.
void append_convergence_record(const std::string& path, const IterateRecord& rec);

/// Geometry snapshots of every patch at one iteration.
void write_geometry_snapshot(const std::string& dir, int iteration,
                             const NonMatchingAssembly& asmb);

/// Sampled displaced mid-surfaces in legacy VTK (quad cells, displacement
/// vectors at the sample points).
void write_displacement_vtk(const std::string& path,
                            const NonMatchingAssembly& asmb, const VecX& d,
                            int samples_per_side = 20);

void write_summary(const std::string& path, const OptimizationOutcome& outcome,
                   const std::string& benchmark, double energy_reference);

/// Single-patch analysis problem from a geometry file plus an optional
/// config (material, thickness, load, boundary conditions).
struct AnalyzeSetup {
  std::unique_ptr<NonMatchingAssembly> assembly;
};
AnalyzeSetup analyze_from_files(const std::string& geometry_path,
                                const std::string& config_path = "");

} // namespace shellopt
