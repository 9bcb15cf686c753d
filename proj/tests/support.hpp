#pragma once

// Shared helpers for the test oracles.

#include "gausskin/random.hpp"
#include "gausskin/rotation.hpp"
#include "gausskin/validate.hpp"

namespace gausskin::testsupport {

inline UnitQuaternion random_quat(Rng& rng) {
    return UnitQuaternion::normalized(rng.normal(), rng.normal(), rng.normal(), rng.normal());
}

using gausskin::random_average_instance;

} // namespace gausskin::testsupport
