// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The chanpred Authors

#pragma once

#include <stdexcept>
#include <string>

namespace chanpred {

enum class ErrorKind {
    config,
    index,
    argument,
    data,
    format,
    shape,
    numeric,
    degenerate,
};

const char *to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define CHANPRED_DEFINE_ERROR(Name, Kind)                                                        \
    class Name : public Error {                                                                  \
    public:                                                                                      \
        explicit Name(const std::string &what) : Error(ErrorKind::Kind, what) {}                 \
    }

CHANPRED_DEFINE_ERROR(ConfigError, config);
CHANPRED_DEFINE_ERROR(IndexError, index);
CHANPRED_DEFINE_ERROR(ArgumentError, argument);
CHANPRED_DEFINE_ERROR(DataError, data);
CHANPRED_DEFINE_ERROR(FormatError, format);
CHANPRED_DEFINE_ERROR(ShapeError, shape);
CHANPRED_DEFINE_ERROR(NumericError, numeric);
CHANPRED_DEFINE_ERROR(DegenerateError, degenerate);

#undef CHANPRED_DEFINE_ERROR

// Raised by coherence_time() for a static receiver; the coherence time is unbounded.
class UnboundedCoherenceError : public ArgumentError {
public:
    UnboundedCoherenceError() : ArgumentError("coherence time is unbounded for zero speed") {}
};

// Divergence or an empty dataset during training; carries the failing epoch.
class TrainingError : public NumericError {
public:
    TrainingError(std::size_t epoch, const std::string &what)
        : NumericError("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

} // namespace chanpred
