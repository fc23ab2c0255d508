#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pilotkey {

/// Non-finite state encountered while integrating the guidance equations.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(std::size_t step, const std::string& what)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Final position too close to the z = 0 plane to read a side.
class AmbiguousOutcome : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class DegenerateInput : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class InsufficientStatistics : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class InsufficientRounds : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class AbortedSession : public std::logic_error {
    using std::logic_error::logic_error;
};

class InsufficientKey : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pilotkey
