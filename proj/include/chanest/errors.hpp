// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace chanest {

// Raised when a numerical routine cannot meet its accuracy contract
// (quadrature non-convergence, singular regularized systems, ...).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when an experiment configuration fails validation. The message
// lists every offending field.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace chanest
