#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace optde {

using Vec = std::vector<double>;

class invalid_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inner-solver failure; carries the last residual seen.
class numeric_failure : public std::runtime_error {
 public:
  numeric_failure(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

inline std::span<const double> as_span(const Vec& v) { return {v.data(), v.size()}; }
inline std::span<double> as_span(Vec& v) { return {v.data(), v.size()}; }

}  // namespace optde
