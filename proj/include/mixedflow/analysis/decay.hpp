#pragma once

#include <cmath>
#include <span>
#include <string>

#include "mixedflow/errors.hpp"

namespace mixedflow::analysis {

/// Least-squares slope of log(value) against t over the trailing
/// `tail_fraction` of the samples.
inline double fit_decay_rate(std::span<const double> t, std::span<const double> value, double tail_fraction = 0.5)
{
    if (t.size() != value.size()) throw InvalidArgument("time and value series differ in length");
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw InvalidArgument("tail fraction must lie in (0, 1]");
    const std::size_t count = t.size();
    const auto window = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(count)));
    if (window < 10) {
        throw InvalidArgument("need at least 10 samples in the fit window, have " + std::to_string(window));
    }
    const std::size_t first = count - window;

    double mt = 0.0;
    double my = 0.0;
    for (std::size_t i = first; i < count; ++i) {
        if (!(value[i] > 0.0)) throw InvalidArgument("decay series has a non-positive value at sample " + std::to_string(i));
        mt += t[i];
        my += std::log(value[i]);
    }
    mt /= static_cast<double>(window);
    my /= static_cast<double>(window);
    double stt = 0.0;
    double sty = 0.0;
    for (std::size_t i = first; i < count; ++i) {
        const double dt = t[i] - mt;
        stt += dt * dt;
        sty += dt * (std::log(value[i]) - my);
    }
    if (!(stt > 0.0)) throw InvalidArgument("decay series has no time spread");
    return sty / stt;
}

} // namespace mixedflow::analysis
