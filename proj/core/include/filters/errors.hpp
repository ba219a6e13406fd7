#pragma once

#include <stdexcept>
#include <string>

namespace filters {

/// Error categories used across the library. The CLI maps `config` to exit
/// code 2 and everything else to exit code 3.
enum class ErrorCode {
    config,                ///< bad configuration, unknown name, invalid parameter
    dimension_mismatch,    ///< vector/matrix dimensions inconsistent with the model
    not_positive_definite, ///< covariance failed the PSD tolerance
    degenerate_ensemble,   ///< fewer particles than the operation requires
    unsupported_model,     ///< operation requires linearity (or d = K = 1)
    domain_too_small,      ///< grid lost more than the allowed off-grid mass
    likelihood_underflow,  ///< all likelihoods vanished; data wildly inconsistent
    singular_covariance,   ///< C^yy solve failed
    numerical,             ///< other numerical failure
};

class FilterError : public std::runtime_error {
public:
    FilterError(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {
[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw FilterError(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}
} // namespace detail

} // namespace filters
