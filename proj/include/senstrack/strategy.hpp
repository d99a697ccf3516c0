#pragma once

#include <algorithm>
#include <limits>
#include <memory>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "senstrack/cost.hpp"
#include "senstrack/dp.hpp"
#include "senstrack/error.hpp"
#include "senstrack/model.hpp"
#include "senstrack/wwlb.hpp"

namespace senstrack {

struct DpOptimal {
  std::shared_ptr<const DpSolution> solution;
};
struct Myopic {};
struct CeWwlb {
  std::shared_ptr<const WwlbEngine> engine;
  std::vector<TestPointPair> pairs;
};
struct EqualAllocation {
  int per_sensor = 0;
  int control = 0;
};
struct Fixed {
  int control = 0;
};
/// Precomputed control sequence; entry k-1 is used at stage k.
struct Schedule {
  std::vector<int> controls;
};

using StrategyKind = std::variant<DpOptimal, Myopic, CeWwlb, EqualAllocation, Fixed, Schedule>;

struct Strategy {
  std::string label;
  StrategyKind kind;
};

inline Strategy make_myopic() { return {"myopic", Myopic{}}; }

inline Strategy make_fixed(const Scenario& s, int id) {
  if (id < 0 || id >= s.num_controls()) throw Error(ErrorCode::InvalidArgument, "control id out of range");
  return {"fixed:" + std::to_string(id), Fixed{id}};
}

inline Strategy make_equal_allocation(const Scenario& s, int per_sensor) {
  if (!s.sensor_based()) throw Error(ErrorCode::InvalidArgument, "equal allocation needs a sensor scenario");
  if (per_sensor < 0 || per_sensor * static_cast<int>(s.sensors.size()) > s.budget)
    throw Error(ErrorCode::InvalidArgument, "equal allocation exceeds the budget");
  for (const auto& c : s.controls)
    if (c.allocation && std::all_of(c.allocation->begin(), c.allocation->end(), [&](int v) { return v == per_sensor; }))
      return {"ea:" + std::to_string(per_sensor), EqualAllocation{per_sensor, c.id}};
  throw Error(ErrorCode::InvalidArgument, "equal allocation not among the controls");
}

inline Strategy make_dp(const Scenario& s, int resolution, const QuadratureSpec& quad) {
  auto grid = std::make_shared<const BeliefGrid>(s.n(), resolution);
  auto sol = std::make_shared<const DpSolution>(backward_induction(s, grid, quad));
  return {"dp", DpOptimal{sol}};
}

inline Strategy make_ce_wwlb(const Scenario& s, WwlbMode mode = WwlbMode::Paper,
                             std::vector<TestPointPair> pairs = {}) {
  if (pairs.empty()) pairs = all_pairs(permutation_test_points(s.n()));
  return {"ce-wwlb", CeWwlb{std::make_shared<const WwlbEngine>(s, mode), std::move(pairs)}};
}

inline int myopic_decide(const Scenario& s, const Belief& p) {
  VectorXd v(s.num_controls());
  for (int u = 0; u < s.num_controls(); ++u) v(u) = current_cost(s, p, u);
  return argmin_with_ties(v);
}

/// Control u_{k-1} chosen at stage k from the predicted belief p_{k|k-1}.
inline int decide(const Strategy& st, const Belief& prediction, int stage, const Scenario& s,
                  const WwlbAccumulator* acc = nullptr) {
  if (stage < 1 || stage > s.horizon) throw Error(ErrorCode::StageOutOfRange, "stage " + std::to_string(stage));
  return std::visit(
      [&](const auto& k) -> int {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Myopic>) {
          return myopic_decide(s, prediction);
        } else if constexpr (std::is_same_v<T, DpOptimal>) {
          return k.solution->decide(prediction, stage);
        } else if constexpr (std::is_same_v<T, CeWwlb>) {
          if (!acc) throw Error(ErrorCode::MissingAccumulator, "CE-WWLB needs an accumulator");
          return ce_wwlb_choose(*k.engine, s, *acc, k.pairs, s.lambda).control;
        } else if constexpr (std::is_same_v<T, EqualAllocation>) {
          return k.control;
        } else if constexpr (std::is_same_v<T, Fixed>) {
          return k.control;
        } else {
          if (stage > static_cast<int>(k.controls.size()))
            throw Error(ErrorCode::StageOutOfRange, "schedule shorter than horizon");
          return k.controls[stage - 1];
        }
      },
      st.kind);
}

/// Replaces belief-independent CE-WWLB by its precomputed schedule.
inline Strategy resolve_schedule(const Strategy& st, const Scenario& s) {
  if (const auto* ce = std::get_if<CeWwlb>(&st.kind)) {
    Schedule sch;
    for (const auto& step : ce_wwlb_plan(*ce->engine, s, ce->pairs, s.lambda)) sch.controls.push_back(step.control);
    return {st.label, sch};
  }
  return st;
}

struct MyopicEnvelope {
  ThresholdReport report;
  std::vector<int> absent;
};

/// Lower envelope of the current-cost curves on a 1001-point grid.
inline MyopicEnvelope myopic_thresholds(const Scenario& s) {
  scalar_controls(s);
  const auto grid = unit_grid();
  std::vector<int> choice;
  for (double p : grid) {
    Belief b(2);
    b << p, 1.0 - p;
    choice.push_back(myopic_decide(s, b));
  }
  MyopicEnvelope env;
  env.report = thresholds_from_choices(grid, choice);
  for (int u = 0; u < s.num_controls(); ++u)
    if (std::find(choice.begin(), choice.end(), u) == choice.end()) env.absent.push_back(u);
  return env;
}

}  // namespace senstrack
