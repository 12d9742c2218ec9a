#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlnl {

/// Malformed input file or config; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace mlnl
