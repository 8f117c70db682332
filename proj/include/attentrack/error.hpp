#pragma once

#include <stdexcept>
#include <string>

namespace attentrack {

// Base for every error the library throws on bad input or unmet preconditions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A dataset row or file violated the schema. `line` is 1-based (header = 1),
// 0 when the problem is not tied to one line.
class SchemaError : public Error {
public:
    SchemaError(std::size_t line, std::string field, const std::string& what)
        : Error(format(line, field, what)), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format(std::size_t line, const std::string& field, const std::string& what) {
        std::string s;
        if (line > 0) s += "line " + std::to_string(line) + ": ";
        if (!field.empty()) s += "field '" + field + "': ";
        return s + what;
    }

    std::size_t line_;
    std::string field_;
};

// Caller asked for something the API cannot do (unknown names, empty inputs).
class UsageError : public Error {
public:
    using Error::Error;
};

// An iterative fit ran out of iterations.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace attentrack
