#pragma once

#include <stdexcept>
#include <string>

namespace argus {

// Domain error carrying a single-line, machine-parseable message.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace argus
