#pragma once

#include <functional>
#include <vector>

#include "fdb/tape.hpp"

namespace fdb {

// Scalar-valued graph under test: receives a fresh tape plus one Var per
// input tensor (in order) and returns the loss node.
template <typename T>
using GradCheckFn = std::function<Var(TapeT<T>&, const std::vector<Var>&)>;

// Central-difference gradient oracle. Returns the max over all checked
// coordinates of |analytic - cd| / max(|analytic|, |cd|, 1e-8).
// When an input has more than max_coords coordinates, a seeded sample of
// max_coords of them is checked instead (max_coords <= 0 checks all).
// Throws ValidationError if the function value goes non-finite.
template <typename T>
double grad_check(const GradCheckFn<T>& f, const std::vector<TensorT<T>>& inputs, T eps,
                  int max_coords = 0, std::uint64_t seed = 0);

}  // namespace fdb
