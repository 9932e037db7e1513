#include "curvlab/errors.hpp"

#include <fmt/format.h>

namespace curvlab {

namespace {

std::string describe_expected(const std::vector<std::string>& expected)
{
    if (expected.empty()) return "";
    std::string out = ", expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i > 0) out += (i + 1 == expected.size()) ? " or " : ", ";
        out += '"' + expected[i] + '"';
    }
    return out;
}

} // namespace

SyntaxError::SyntaxError(std::size_t offset, std::vector<std::string> expected, const std::string& detail)
    : Error(fmt::format("syntax error at offset {}: {}{}", offset, detail, describe_expected(expected))),
      offset_(offset), expected_(std::move(expected))
{
}

void EvalError::set_location(double r)
{
    if (has_location_) return;
    has_location_ = true;
    location_ = r;
    message_ += fmt::format(" (at r = {:.17g})", r);
}

ParseError::ParseError(int line, const std::string& detail)
    : ConfigError(fmt::format("line {}: {}", line, detail)), line_(line)
{
}

ValidationError::ValidationError(std::string key, const std::string& detail)
    : ConfigError(fmt::format("{}: {}", key, detail)), key_(std::move(key))
{
}

} // namespace curvlab
