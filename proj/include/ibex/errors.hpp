#pragma once

#include <stdexcept>
#include <string>

namespace ibex {

// Base class for all domain errors thrown by this library. Input validation
// failures (bad masses, shape mismatches) use std::invalid_argument instead.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A smooth activation (sigmoid/tanh/softplus) blocks exact piecewise-linear
// analysis.
struct SmoothActivation : Error {
  using Error::Error;
};

// The network output depends on more than one scalar degree of freedom of the
// input, so no exact one-dimensional reduction exists.
struct MultivariateDependence : Error {
  using Error::Error;
};

// A stochastic layer was found where a deterministic map is required.
struct StochasticLayer : Error {
  using Error::Error;
};

// The support of a measure reaches outside the domain of the function it is
// pushed through.
struct SupportOutsideDomain : Error {
  using Error::Error;
};

// Gradient requested through a non-differentiable construct (step activation,
// piecewise-constant cost).
struct NonDifferentiable : Error {
  using Error::Error;
};

// The output layer cannot be read as a probability over class labels.
struct NonProbabilisticOutput : Error {
  using Error::Error;
};

// q is zero somewhere p is positive, so D(p||q) is undefined.
struct AbsoluteContinuityViolation : Error {
  using Error::Error;
};

// A finite-difference probe hit an infinite cost value.
struct InfiniteCost : Error {
  using Error::Error;
};

// Training loss exceeded the divergence guard.
struct Diverged : Error {
  using Error::Error;
};

// Malformed scenario or network file; carries the 1-based line number.
struct ParseError : Error {
  ParseError(const std::string& what, int line_number)
      : Error(what + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  int line;
};

}  // namespace ibex
