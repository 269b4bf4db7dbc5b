#ifndef CGYM_GRADCHECK_HPP_
#define CGYM_GRADCHECK_HPP_

#include <cstdint>
#include <functional>

#include "cgym/network.hpp"
#include "cgym/ppo.hpp"

namespace cgym {

// Central finite-difference check of the full PPO loss gradient. Only
// loss values are used on the numeric side; backward() is never called.

struct GradCheckCase {
  ParameterBlock<double> params;
  PpoBatch<double> batch;
  PpoConfig config;
};

/// Random small actor-critic (at most `max_params` parameters) with a random
/// batch. Samples whose hidden pre-activations or probability ratios lie
/// within `kink_margin` of a ReLU or clip breakpoint are redrawn, so the
/// loss is smooth over the finite-difference stencil.
GradCheckCase random_gradcheck_case(std::uint64_t seed, std::size_t max_params = 5000, double kink_margin = 1e-2);

Vector<double> central_differences(const std::function<double(const Vector<double>&)>& f, const Vector<double>& x,
                                   double h);

/// max_i |a_i - n_i| / max_i |n_i| (0 when both vanish).
double relative_error(const Vector<double>& analytic, const Vector<double>& numeric);

struct GradCheckReport {
  int networks = 0;
  double max_relative_error = 0.0;
  std::size_t max_parameters = 0;
};

GradCheckReport run_gradcheck(int networks, std::uint64_t seed, double h = 1e-4);

}  // namespace cgym

#endif  // CGYM_GRADCHECK_HPP_
