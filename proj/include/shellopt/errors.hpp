// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace shellopt {

// Geometry evaluated where the first fundamental form degenerates.
struct SingularGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Intersection tangent parallel to a surface normal, or a singular
// coordinate Jacobian; the intersection cannot be tracked further.
struct DegenerateIntersectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoIntersectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Newton on the intersection coordinates failed to converge. Optimizers
// treat this as a step-rejection signal.
struct TrackingLostError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point inversion into a B-spline block failed from every start.
struct EmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleConstraintError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace shellopt
