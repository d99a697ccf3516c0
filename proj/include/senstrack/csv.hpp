#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "senstrack/dp.hpp"
#include "senstrack/sim.hpp"
#include "senstrack/wwlb.hpp"

namespace senstrack {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<MetricsReport>& rows) {
  os << "lambda,strategy,amse,amse_ci,adp,adp_ci,aec,aec_ci,runs,horizon,seed\n";
  for (const auto& r : rows)
    os << fmt(r.lambda) << ',' << r.strategy << ',' << fmt(r.amse) << ',' << fmt(r.amse_ci) << ',' << fmt(r.adp)
       << ',' << fmt(r.adp_ci) << ',' << fmt(r.aec) << ',' << fmt(r.aec_ci) << ',' << r.runs << ',' << r.horizon
       << ',' << r.seed << '\n';
}

inline void write_policy_csv(std::ostream& os, const DpSolution& sol) {
  const auto& g = *sol.grid;
  os << "stage,p_index";
  for (int i = 0; i < g.n(); ++i) os << ",p" << i;
  os << ",control_id,value\n";
  for (std::size_t k = 0; k < sol.policies.size(); ++k)
    for (long long i = 0; i < g.size(); ++i) {
      os << sol.policies[k].stage << ',' << i;
      for (int j = 0; j < g.n(); ++j) os << ',' << fmt(g.points()(j, i));
      os << ',' << sol.policies[k].choice[i] << ',' << fmt(sol.values[k].values(i)) << '\n';
    }
}

inline void write_thresholds_csv(std::ostream& os, const DpSolution& sol) {
  os << "stage,p_low,p_high,control_id\n";
  for (const auto& p : sol.policies) {
    const auto rep = p.thresholds ? *p.thresholds : extract_thresholds(p, *sol.grid);
    for (const auto& iv : rep.intervals)
      os << p.stage << ',' << fmt(iv.p_low) << ',' << fmt(iv.p_high) << ',' << iv.control << '\n';
  }
}

inline void write_wwlb_csv(std::ostream& os, const std::vector<CeWwlbStep>& steps) {
  os << "stage,control_id,h_k,h_k1,J,v,bound\n";
  for (const auto& s : steps)
    os << s.stage << ',' << s.control << ',' << s.h_k << ',' << s.h_k1 << ',' << fmt(s.j)
       << ',' << fmt(s.v) << ',' << fmt(s.bound) << '\n';
}

}  // namespace senstrack
