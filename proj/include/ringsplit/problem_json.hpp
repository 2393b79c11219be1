#pragma once

#include <iosfwd>
#include <string>

#include "ringsplit/problems.hpp"

namespace ringsplit {

// JSON problem schema (operator order is 1-based A_1..A_n / B_1..B_m):
//
// {
//   "name": "...", "dim": d, "mode": "cocoercive"|"lipschitz"|"mixed",
//   "resolvents": [ {"kind": "...", "params": {...}}, ... ],
//   "forwards":   [ {"kind": "...", "params": {...},
//                    "regularity": "cocoercive"|"lipschitz_monotone", "L": ...}, ... ],
//   "known_solution": [ ... ]            // optional
// }
//
// Resolvent kinds: zero {}, l1_prox {weight}, box_projection {lower, upper}
// (null entries mean unbounded), halfspace_projection {normal, offset},
// affine_resolvent {q, c}, subdiff_abs_sum {}.
// Forward kinds: zero_map {}, affine_map {m, c}, quad_gradient {q, c},
// skew_map {k}, saddle_bilinear {p}.

std::string problem_to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const std::string& text);

ProblemSpec load_problem_file(const std::string& path);
void save_problem_file(const std::string& path, const ProblemSpec& spec);

Mode mode_from_string(const std::string& s);

}  // namespace ringsplit
