#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bpref/teacher.hpp"

namespace bpref {

// One evaluation checkpoint. CSV column order is fixed:
// step,true_return,success,queries_used,reward_loss,ensemble_disagreement
struct CurveRow {
  long step = 0;
  double true_return = 0.0;  // mean over evaluation episodes
  double success = 0.0;      // success rate over evaluation episodes
  int queries_used = 0;
  double reward_loss = 0.0;
  double ensemble_disagreement = 0.0;
};

struct RunRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string teacher;
  std::string algo;
  std::string env;
  int budget = 0;
  std::vector<CurveRow> curve;
  std::vector<double> final_eval_returns;
  std::vector<double> final_eval_success;

  // Throws when steps are not strictly increasing or query counts decrease
  // or exceed the budget.
  void validate() const;
  double final_return() const;
  double final_success() const;
};

// A teacher response as persisted in records.jsonl.
struct QueryLog {
  std::int64_t query_step = 0;
  Preference label = Preference::kSkipped;
  double sum0 = 0.0;         // undiscounted ground-truth segment returns
  double sum1 = 0.0;
  double discounted0 = 0.0;  // teacher-discounted returns
  double discounted1 = 0.0;
};

inline constexpr const char* kCurveHeader =
    "step,true_return,success,queries_used,reward_loss,ensemble_disagreement";

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows);
std::vector<CurveRow> read_curve_csv(std::istream& in);

std::string to_jsonl(const QueryLog& q);
QueryLog query_log_from_json_line(const std::string& line);

}  // namespace bpref
