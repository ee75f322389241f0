#pragma once

#include <stdexcept>
#include <string>

namespace gossipguard {

using NodeId = std::size_t;

// Raised for any precondition violation on caller-supplied data.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Configuration problem; carries the dotted path of the offending field.
class ConfigError : public InputError {
public:
    ConfigError(std::string field, const std::string& what)
        : InputError(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace gossipguard
