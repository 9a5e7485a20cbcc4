#pragma once

#include <stdexcept>
#include <string>

namespace gmvae {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor shapes do not line up (matmul inner dims, broadcast, ...).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A value lies outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A caller broke an API precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A file could not be parsed (IDX container, manifest, bundle).
class FormatError : public Error {
public:
    using Error::Error;
};

/// An iterative fit failed to converge or the data is degenerate.
class FitError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

} // namespace gmvae
