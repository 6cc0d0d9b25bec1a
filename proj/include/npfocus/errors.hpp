#pragma once

#include <stdexcept>
#include <string>

namespace npfocus {

/// Raised when an input violates a documented precondition (bad parameter,
/// NaN in a stream, empty training set, malformed JSON document).
class invalid_input : public std::invalid_argument {
  public:
    explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a changepoint location is requested while the statistic is 0.
class undefined_estimate : public std::domain_error {
  public:
    explicit undefined_estimate(const std::string& what) : std::domain_error(what) {}
};

}  // namespace npfocus
