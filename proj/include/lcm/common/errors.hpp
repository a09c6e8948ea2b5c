#pragma once

#include <stdexcept>
#include <string>

namespace lcm {

// Bad or missing parameter/config input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (illegal action, empty mask, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Raised by the trainer's divergence detector.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lcm
