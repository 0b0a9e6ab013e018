#pragma once

#include "safelqr/types.hpp"

namespace safelqr {

/// Bundled 2-state / 1-input demonstration system: an open-loop-stable
/// plant (spectral radius 0.8) with a strongly coupled upper-triangular A,
/// W = I, and cheap-control weights Q = I, R = 1e-4. Small enough to study
/// switching behavior by hand.
LinearPlant demo_plant();
LQWeights demo_weights();

/// Bundled 8-state / 4-input stand-in for a mid-size industrial process:
/// a randomly generated but fixed open-loop-stable system (spectral radius
/// about 0.95) with W = I and Q = I, R = I. Not derived from any real
/// process data; committed in data/standin8_plant.txt as well, and the two
/// copies are kept identical by a unit test.
LinearPlant standin_plant();
LQWeights standin_weights();

}  // namespace safelqr
