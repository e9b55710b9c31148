#include "egats/errors.hpp"

namespace egats {

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
    std::string out = "invalid invocation";
    for (const auto& v : violations) {
        out += "; " + v.parameter + ": " + v.message;
    }
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace egats
