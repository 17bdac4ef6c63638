#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fmdp {

/// Input data (configs, states, files) failed validation. Carries every
/// violation found, each prefixed with the document path it refers to.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations);
    ValidationError(const std::string& path, const std::string& message);

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// A caller broke an operation's precondition.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A problem is too large for the requested operation (enumeration caps,
/// brute-force caps).
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Index outside the valid range of a layout.
class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

}  // namespace fmdp
