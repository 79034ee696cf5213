#pragma once

#include <stdexcept>
#include <string>

namespace sntk {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidGraph : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

// A diagonal block of the block-degree matrix is not positive definite and
// pseudo-inverse regularization was disabled.
struct SingularDegreeBlock : Error {
    using Error::Error;
};

struct AlphaOutOfRange : Error {
    using Error::Error;
};

// A self-covariance diagonal entry required by a Gaussian expectation came
// out significantly negative; upstream data is corrupt.
struct NonPositiveVariance : Error {
    using Error::Error;
};

struct IncompatibleItems : Error {
    using Error::Error;
};

struct SingularSystem : Error {
    using Error::Error;
};

struct TooLarge : Error {
    using Error::Error;
};

struct DisconnectedGraph : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

} // namespace sntk
