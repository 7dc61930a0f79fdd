#pragma once

#include <stdexcept>
#include <string>

namespace ppcm {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Vector/matrix dimensions do not match what the operation expects.
struct ShapeMismatch : Error {
  using Error::Error;
};

/// Random topology generation failed to produce a connected graph.
struct DisconnectedTopology : Error {
  using Error::Error;
};

/// Problem generator called with inconsistent sizes (e.g. m < n).
struct InvalidDimensions : Error {
  using Error::Error;
};

/// Direct least-squares factorization detected a singular system.
struct RankDeficient : Error {
  using Error::Error;
};

/// A per-agent scaling factor exceeded its allowed cap.
struct ScalingOverflow : Error {
  using Error::Error;
};

/// Zero search direction at a non-stationary point; indicates a scaling bug.
struct DegeneratePrediction : Error {
  using Error::Error;
};

/// Self-tuning loop failed to satisfy the acceptance ratio within the retry cap.
struct InnerLoopStall : Error {
  using Error::Error;
};

/// Method/topology combination is not supported (e.g. uniform averaging
/// weights on a non-complete graph).
struct TopologyUnsupported : Error {
  using Error::Error;
};

/// A report or config file does not match the expected schema.
struct SchemaMismatch : Error {
  using Error::Error;
};

}  // namespace ppcm
