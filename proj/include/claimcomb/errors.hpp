#pragma once

#include <stdexcept>
#include <string>

namespace claimcomb {

// Single exception type for the whole library. The kind drives the CLI
// exit code (config=2, data=3, solver/numeric=4).
class Error : public std::runtime_error {
public:
    enum class Kind {
        invalid_input,  // precondition violation (bad lengths, non-finite values, ...)
        config,         // malformed or inconsistent configuration
        data,           // file/schema problems
        solver,         // numerical solver failure (rank deficiency, non-convergence)
        numeric         // undefined quantity (zero denominator, zero scale)
    };

    Error(Kind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

    static Error invalid(std::string msg) { return {Kind::invalid_input, std::move(msg)}; }
    static Error config(std::string msg) { return {Kind::config, std::move(msg)}; }
    static Error data(std::string msg) { return {Kind::data, std::move(msg)}; }
    static Error solver(std::string msg) { return {Kind::solver, std::move(msg)}; }
    static Error numeric(std::string msg) { return {Kind::numeric, std::move(msg)}; }

private:
    Kind kind_;
};

} // namespace claimcomb
