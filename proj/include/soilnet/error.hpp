#pragma once

#include <stdexcept>
#include <string>

namespace soilnet {

/// Raised for every precondition or data error in the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace soilnet
