#pragma once

#include <stdexcept>
#include <string>

namespace efoq {

// Failure taxonomy shared by the library and the command line tool. The tool
// maps these to exit codes: schema and usage problems exit 2, broken internal
// contracts exit 3, and runtime limits (caps, exhausted sampling budgets)
// exit 1 like any ordinary failure.

// Malformed input: bad file syntax, out-of-schema JSON, unusable arguments.
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// A precondition the caller was required to uphold does not hold.
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

// A configured resource cap was exceeded or a sampling budget ran out.
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// A query could not be executed to completion by the active reasoner.
struct ExecutionError : std::runtime_error {
    explicit ExecutionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace efoq
