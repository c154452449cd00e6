#include "ikesim/errors.hpp"

#include <utility>

namespace ikesim {

ValidationError::ValidationError(std::string field, const std::string& message)
    : Error(field + ": " + message), field_(std::move(field)) {}

}  // namespace ikesim
