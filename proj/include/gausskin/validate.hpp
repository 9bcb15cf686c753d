#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gausskin/random.hpp"
#include "gausskin/rotation.hpp"

namespace gausskin {

struct SuiteResult {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

// One weighted-average problem drawn from a realistic articulation: bone
// rotations accumulated along a chain with bounded per-joint angles, and up
// to `max_active` adjacent normalized weights with a dominant entry.
struct AverageInstance {
    std::vector<UnitQuaternion> bones;
    std::vector<double> weights;
    std::size_t warm_start = 0; // index of the max-weight bone
};

AverageInstance random_average_instance(Rng& rng, int max_joints = 24, int max_active = 4);

// Seeded self-check suites: power-vs-exact eigensolver agreement, SH
// sampling equivariance, end-to-end rigid equivariance on the fixture, and
// the PLY round trip. Each suite reports its max observed error against the
// tolerance it must meet.
std::vector<SuiteResult> run_validation_suites(std::uint64_t seed, int workers);

} // namespace gausskin
