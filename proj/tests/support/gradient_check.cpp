#include "gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tsad::testing {

namespace {

double evaluate(numkit::ParamStore& store, const LossBuilder& build) {
  numkit::Tape tape(false);
  return build(tape, store).item();
}

}  // namespace

GradientCheckResult check_gradients(numkit::ParamStore& store, const LossBuilder& build, double step, double floor) {
  {
    numkit::Tape tape;
    tape.backward(build(tape, store));
  }
  GradientCheckResult result;
  for (auto& [name, tensor] : store) {
    const std::vector<double> analytic(tensor.grad().begin(), tensor.grad().end());
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double original = tensor[i];
      tensor[i] = original + step;
      const double up = evaluate(store, build);
      tensor[i] = original - step;
      const double down = evaluate(store, build);
      tensor[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double rel = std::fabs(analytic[i] - numeric) / std::max(std::fabs(analytic[i]) + std::fabs(numeric), floor);
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace tsad::testing
