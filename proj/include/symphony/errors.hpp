// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace symphony {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad call arguments (counts, enum values, K > M, unparseable manifests).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Shape mismatch between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Mutation attempted on a frozen adjacency.
class FrozenError : public Error {
public:
    using Error::Error;
};

// Operation invoked out of order (e.g. backward without forward).
class StateError : public Error {
public:
    using Error::Error;
};

// Divergence, NaN, or solver non-convergence.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace symphony
