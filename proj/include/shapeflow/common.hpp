#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace shapeflow {

enum class ErrorKind {
    invalid_config,      // malformed input, bad parameters, schema violations
    domain_mismatch,     // two grid objects living on different domains
    domain_violation,    // geometry that does not fit the computational box
    solver_failure,      // iteration cap or tolerance not reached
    invariant_violation, // a post-hoc check on computed data failed
    io_error,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool ok, ErrorKind kind, const std::string& msg) {
    if (!ok) fail(kind, msg);
}

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double pi = 3.14159265358979323846;

inline bool nearly_equal(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

} // namespace shapeflow
