#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

namespace bracket_steer {

enum class ErrorClass {
    InvalidInput,     // dimension mismatch, bad parameter
    SelectionShape,   // malformed bracket selection
    Lookup,           // unknown scenario / model name
    Parse,            // scenario file is not well-formed
    Schema,           // scenario file violates an invariant
    NumericDomain,    // non-finite value produced by a field
    RankDegeneracy,   // extension matrix singular or above the condition cap
    Divergence,       // state left the guard ball
    Io
};

[[nodiscard]] constexpr std::string_view error_class_name(ErrorClass c) noexcept {
    switch (c) {
        case ErrorClass::InvalidInput: return "invalid_input";
        case ErrorClass::SelectionShape: return "selection_shape";
        case ErrorClass::Lookup: return "lookup";
        case ErrorClass::Parse: return "parse";
        case ErrorClass::Schema: return "schema";
        case ErrorClass::NumericDomain: return "numeric_domain";
        case ErrorClass::RankDegeneracy: return "rank_degeneracy";
        case ErrorClass::Divergence: return "divergence";
        case ErrorClass::Io: return "io";
    }
    return "unknown";
}

/// Process exit status for each error class: 2 invalid input, 3 numeric failure, 4 I/O.
[[nodiscard]] constexpr int exit_code_for(ErrorClass c) noexcept {
    switch (c) {
        case ErrorClass::NumericDomain:
        case ErrorClass::RankDegeneracy:
        case ErrorClass::Divergence: return 3;
        case ErrorClass::Io: return 4;
        default: return 2;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    [[nodiscard]] ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

/// Raised when the extension matrix cannot be inverted within the condition cap at `state`.
class RankDegeneracyError : public Error {
public:
    RankDegeneracyError(const std::string& what, Eigen::VectorXd state, double condition)
        : Error(ErrorClass::RankDegeneracy, what), state_(std::move(state)), condition_(condition) {}
    [[nodiscard]] const Eigen::VectorXd& state() const noexcept { return state_; }
    [[nodiscard]] double condition() const noexcept { return condition_; }

private:
    Eigen::VectorXd state_;
    double condition_;
};

}  // namespace bracket_steer
