// Minimal library walkthrough: one state with two conflicting safety
// constraints, filtered by the relaxed and hierarchical programs.

#include <iostream>

#include "hcbf/filters.hpp"

using namespace hcbf;

int main() {
  const RomDynamics dyn = double_integrator();

  FilterConfig cfg;
  cfg.barriers = {
      BarrierSpec::circle({-1.0, 5.5}, 4.0),   // keep out, top priority
      BarrierSpec::circle({-1.0, 4.5}, 5.0),   // keep out, relaxable
  };
  cfg.strict_count = 1;
  cfg.schedules = {WeightSchedule{5.0, 1.3}};
  cfg.input_box = InputBox::symmetric(5.0);

  // Just outside the first disc, inside the second, moving up.
  const State x{{3.1, 5.0}, {0.2, 1.0}};
  const Vec2 u_star{-3.0, 1.5};  // feedback pulls toward both discs

  std::cout << "h1 = " << eval_h(cfg.barriers[0], x)
            << ", h2 = " << eval_h(cfg.barriers[1], x) << "\n";

  const auto cert = conflict_certificate(x, cfg.barriers, dyn, cfg.input_box);
  std::cout << "joint constraints " << (cert.compatible ? "compatible" : "conflicting")
            << "\n";

  cfg.mode = FilterMode::Relaxed;
  const FilterResult relaxed = r_cbf_qp(dyn, u_star, x, cfg);
  std::cout << "relaxed:      u = [" << relaxed.u.transpose()
            << "], delta = " << relaxed.delta(0) << "\n";

  cfg.mode = FilterMode::Hierarchical;
  const FilterResult hier = h_cbf_qp(dyn, u_star, x, cfg);
  std::cout << "hierarchical: u = [" << hier.u.transpose()
            << "], delta = " << hier.delta(0) << "\n";
  return 0;
}
