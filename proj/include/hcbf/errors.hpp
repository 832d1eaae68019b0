#pragma once

#include <stdexcept>
#include <string>

namespace hcbf {

// Malformed QP data: dimension mismatch, asymmetric or indefinite Hessian,
// inconsistent bounds.
struct InvalidProblem : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed scenario / filter / tune configuration.
struct InvalidConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Trace is unusable for cost evaluation (aborted run, too few records).
struct InvalidTrace : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Barrier gradient requested at a point where it is undefined
// (circular barrier evaluated at its own center).
struct SingularGradient : std::domain_error {
  using std::domain_error::domain_error;
};

// Definition-2 constant set C(x) is empty because h1(x) < 0.
struct EmptyConstantSet : std::domain_error {
  using std::domain_error::domain_error;
};

// Lookup of a scenario name that does not exist.
struct UnknownScenario : std::out_of_range {
  using std::out_of_range::out_of_range;
};

}  // namespace hcbf
