#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "senstrack/cost.hpp"
#include "senstrack/dp.hpp"
#include "senstrack/model.hpp"
#include "senstrack/strategy.hpp"

namespace senstrack {

struct StructureCheck {
  std::string name;
  bool pass = true;
  bool applicable = true;
  std::string detail;
};

inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Belief points used by the pointwise checks: the 2-state unit grid, or grid vertices for n >= 3.
inline std::vector<Belief> check_beliefs(int n) {
  std::vector<Belief> out;
  if (n == 2) {
    for (double p : unit_grid(101)) {
      Belief b(2);
      b << p, 1.0 - p;
      out.push_back(b);
    }
    return out;
  }
  BeliefGrid g(n, n <= 4 ? 10 : 4);
  for (long long i = 0; i < g.size(); ++i) out.push_back(g.point(i));
  return out;
}

inline std::vector<StructureCheck> structure_battery(const Scenario& s, int resolution, const QuadratureSpec& quad) {
  std::vector<StructureCheck> out;
  const auto beliefs = check_beliefs(s.n());

  {
    StructureCheck c{"dual_form", true, true, ""};
    double worst = 0.0;
    for (int u = 0; u < s.num_controls(); ++u)
      for (const auto& p : beliefs) {
        const double a = current_cost_hform(p, s.model(u), s.controls[u].cost, s.lambda);
        const double b = current_cost_trace(p, s.model(u), s.controls[u].cost, s.lambda);
        worst = std::max(worst, std::abs(a - b));
      }
    c.pass = worst <= 1e-10;
    c.detail = "max |h-form - trace form| = " + fmt_short(worst);
    out.push_back(c);
  }

  std::optional<std::vector<ScalarControl>> scalar;
  try {
    scalar = scalar_controls(s);
  } catch (const Error&) {
  }

  {
    StructureCheck c{"closed_form_2state", true, scalar.has_value(), "needs 2 states and scalar kernels"};
    if (scalar) {
      double worst = 0.0;
      for (int u = 0; u < s.num_controls(); ++u)
        for (const auto& p : beliefs)
          worst = std::max(worst, std::abs(current_cost_2state_scalar(p(0), (*scalar)[u], s.lambda) -
                                           current_cost(s, p, u)));
      c.pass = worst <= 1e-10;
      c.detail = "max deviation = " + fmt_short(worst);
    }
    out.push_back(c);
  }

  auto grid = std::make_shared<const BeliefGrid>(s.n(), resolution);
  {
    StructureCheck c{"current_cost_concavity", true, true, ""};
    double worst = -1.0;
    for (int u = 0; u < s.num_controls(); ++u) {
      VectorXd v(grid->size());
      for (long long g = 0; g < grid->size(); ++g) v(g) = current_cost(s, grid->point(g), u);
      auto r = check_concavity(v, *grid);
      worst = std::max(worst, r.max_second_diff);
      c.pass = c.pass && r.pass;
    }
    c.detail = "max second difference = " + fmt_short(worst) + (s.n() >= 3 ? " (advisory)" : "");
    out.push_back(c);
  }

  const DpSolution sol = backward_induction(s, grid, quad);
  {
    StructureCheck c{"value_concavity", true, true, ""};
    double worst = -1.0;
    for (const auto& t : sol.values) {
      auto r = check_concavity(t);
      worst = std::max(worst, r.max_second_diff);
      c.pass = c.pass && r.pass;
    }
    c.detail = "max second difference over stages = " + fmt_short(worst) + (s.n() >= 3 ? " (advisory)" : "");
    out.push_back(c);
  }

  {
    StructureCheck c{"passive_sensing", true, scalar.has_value(), "needs 2 states and scalar kernels"};
    if (scalar) {
      const auto u = passive_optimal(s);
      if (u) {
        bool constant = true;
        for (const auto& p : sol.policies)
          for (int ch : p.choice) constant = constant && ch == *u;
        c.pass = constant;
        c.detail = "dominating control " + std::to_string(*u) + (constant ? ", DP policy constant" : ", DP policy varies");
      } else {
        c.applicable = false;
        c.detail = "no control satisfies the passive-sensing hypothesis";
      }
    }
    out.push_back(c);
  }

  {
    StructureCheck c{"case_labels", true, scalar.has_value(), "needs 2 states and scalar kernels"};
    if (scalar) {
      c.detail.clear();
      for (std::size_t u = 0; u < scalar->size(); ++u) {
        if (u) c.detail += ' ';
        c.detail += std::to_string(u) + ":" + to_string(classify_case((*scalar)[u]).variant);
      }
    }
    out.push_back(c);
  }

  {
    StructureCheck c{"case4_crossings", true, false, "no qualifying control pair"};
    if (scalar) {
      std::string d;
      for (std::size_t a = 0; a < scalar->size(); ++a)
        for (std::size_t b = 0; b < scalar->size(); ++b) {
          if (a == b) continue;
          double ps;
          try {
            ps = case4_crossing((*scalar)[a], (*scalar)[b]);
          } catch (const Error&) {
            continue;
          }
          c.applicable = true;
          Belief lo(2), hi(2);
          lo << ps - 1e-6, 1.0 - ps + 1e-6;
          hi << ps + 1e-6, 1.0 - ps - 1e-6;
          const double below = current_cost(s, lo, int(a)) - current_cost(s, lo, int(b));
          const double above = current_cost(s, hi, int(a)) - current_cost(s, hi, int(b));
          const bool ok = below * above <= 0.0;
          c.pass = c.pass && ok;
          if (!d.empty()) d += "; ";
          d += std::to_string(a) + "/" + std::to_string(b) + " p*=" + fmt_short(ps) + (ok ? "" : " (no sign change)");
        }
      if (c.applicable) c.detail = d;
    }
    out.push_back(c);
  }

  {
    StructureCheck c{"thresholds", true, s.n() == 2, "needs 2 states"};
    if (s.n() == 2) {
      c.detail.clear();
      for (const auto& p : sol.policies) {
        const auto& rep = *p.thresholds;
        if (!c.detail.empty()) c.detail += " | ";
        c.detail += "stage " + std::to_string(p.stage) + ":";
        for (const auto& iv : rep.intervals)
          c.detail += " [" + fmt_short(iv.p_low) + "," + fmt_short(iv.p_high) + "]->" + std::to_string(iv.control);
        if (!rep.non_contiguous.empty()) c.detail += " (split regions)";
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace senstrack
