#pragma once

#include <functional>

namespace hermex {

// Scalar Ito problem dX = F(X, t) dt + G(X, t) dW on [0, horizon].
//
// F and G are opaque evaluable fields.  For square-root diffusions the
// field itself is expected to clamp negative arguments to zero (full
// truncation); `nonnegative_state` marks that convention so solvers and
// schemes can count how often the clamp fired without peeking inside G.
struct SdeProblem {
    std::function<double(double, double)> drift;      // F(x, t)
    std::function<double(double, double)> diffusion;  // G(x, t)
    double x0 = 0.0;
    double horizon = 1.0;
    bool nonnegative_state = false;
};

}  // namespace hermex
