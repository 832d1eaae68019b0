// Runs the bundled navigation scenario closed loop and prints the summary.

#include <iostream>

#include "hcbf/sim.hpp"

using namespace hcbf;

int main() {
  ScenarioConfig sc = builtin_scenario("sim-paper");
  sc.filter.mode = FilterMode::Hierarchical;

  const SimTrace trace = run_scenario(sc);
  const auto& s = trace.summary;
  std::cout << "records:          " << trace.records.size() << "\n"
            << "final error:      " << s.final_error << "\n"
            << "mean error:       " << s.mean_error << "\n"
            << "infeasible steps: " << s.infeasible_steps << "\n";
  for (int k = 0; k < s.min_h.size(); ++k)
    std::cout << "h_" << k + 1 << ": min " << s.min_h(k) << ", violation "
              << s.violation_integral(k) << "\n";
  return 0;
}
