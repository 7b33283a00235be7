#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "hermex/errors.hpp"

namespace hermex {

// Scalar function of time with its running integral from 0 and derivative.
// The built-in kinds carry closed forms; custom functions fall back to
// composite Simpson for the integral and central differences for the slope.
class TimeFunction {
  public:
    static TimeFunction constant(double c) {
        TimeFunction f;
        f.eval_ = [c](double) { return c; };
        f.integral_ = [c](double t) { return c * t; };
        f.derivative_ = [](double) { return 0.0; };
        return f;
    }

    // sin(t), integral 1 - cos(t)
    static TimeFunction sine() {
        TimeFunction f;
        f.eval_ = [](double t) { return std::sin(t); };
        f.integral_ = [](double t) { return 1.0 - std::cos(t); };
        f.derivative_ = [](double t) { return std::cos(t); };
        return f;
    }

    // (1 + t)^p
    static TimeFunction power(double p) {
        TimeFunction f;
        f.eval_ = [p](double t) { return std::pow(1.0 + t, p); };
        f.integral_ = [p](double t) {
            if (p == -1.0) return std::log1p(t);
            return (std::pow(1.0 + t, p + 1.0) - 1.0) / (p + 1.0);
        };
        f.derivative_ = [p](double t) { return p * std::pow(1.0 + t, p - 1.0); };
        return f;
    }

    static TimeFunction custom(std::function<double(double)> eval,
                               std::function<double(double)> integral = nullptr) {
        if (!eval) throw ConfigError("custom time function must be evaluable");
        TimeFunction f;
        f.eval_ = std::move(eval);
        f.integral_ = std::move(integral);
        return f;
    }

    double operator()(double t) const { return eval_(t); }

    double integral(double t) const {
        if (integral_) return integral_(t);
        return simpson(t);
    }

    double derivative(double t) const {
        if (derivative_) return derivative_(t);
        const double h = 1e-6 * std::max(1.0, std::fabs(t));
        return (eval_(t + h) - eval_(t - h)) / (2.0 * h);
    }

  private:
    double simpson(double t, int panels = 512) const {
        if (t == 0.0) return 0.0;
        const double h = t / panels;
        double sum = eval_(0.0) + eval_(t);
        for (int i = 1; i < panels; ++i) sum += eval_(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
        return sum * h / 3.0;
    }

    std::function<double(double)> eval_;
    std::function<double(double)> integral_;
    std::function<double(double)> derivative_;
};

}  // namespace hermex
