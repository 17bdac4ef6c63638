#include "fmdp/errors.hpp"

namespace fmdp {
namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += "; ";
        out += s;
    }
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error("validation failed: " + join(violations)), violations_(std::move(violations)) {}

ValidationError::ValidationError(const std::string& path, const std::string& message)
    : ValidationError(std::vector<std::string>{path + ": " + message}) {}

}  // namespace fmdp
