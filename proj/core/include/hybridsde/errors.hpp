#ifndef HYBRIDSDE_ERRORS_HPP
#define HYBRIDSDE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hybridsde {

struct NonFiniteRate : std::runtime_error {
  explicit NonFiniteRate(const std::string& what) : std::runtime_error(what) {}
};

struct NegativeRate : std::runtime_error {
  explicit NegativeRate(const std::string& what) : std::runtime_error(what) {}
};

struct DivergentMass : std::runtime_error {
  explicit DivergentMass(const std::string& what) : std::runtime_error(what) {}
};

struct MajorantViolated : std::runtime_error {
  explicit MajorantViolated(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteState : std::runtime_error {
  explicit NonFiniteState(const std::string& what) : std::runtime_error(what) {}
};

struct AllPathsTruncated : std::runtime_error {
  explicit AllPathsTruncated(const std::string& what) : std::runtime_error(what) {}
};

struct QuadratureFailure : std::runtime_error {
  explicit QuadratureFailure(const std::string& what) : std::runtime_error(what) {}
};

struct InversionBracketFailure : std::runtime_error {
  explicit InversionBracketFailure(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hybridsde

#endif
