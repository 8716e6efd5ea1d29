#include "bpref/run_record.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bpref {

void RunRecord::validate() const {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (i > 0 && curve[i].step <= curve[i - 1].step) {
      throw std::invalid_argument("run record: curve steps must be strictly increasing");
    }
    if (i > 0 && curve[i].queries_used < curve[i - 1].queries_used) {
      throw std::invalid_argument("run record: queries used must be non-decreasing");
    }
    if (curve[i].queries_used > budget) throw std::invalid_argument("run record: queries exceed budget");
  }
}

double RunRecord::final_return() const {
  if (!final_eval_returns.empty()) {
    return std::accumulate(final_eval_returns.begin(), final_eval_returns.end(), 0.0) /
           static_cast<double>(final_eval_returns.size());
  }
  return curve.empty() ? 0.0 : curve.back().true_return;
}

double RunRecord::final_success() const {
  if (!final_eval_success.empty()) {
    return std::accumulate(final_eval_success.begin(), final_eval_success.end(), 0.0) /
           static_cast<double>(final_eval_success.size());
  }
  return curve.empty() ? 0.0 : curve.back().success;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << kCurveHeader << '\n';
  for (const auto& r : rows) {
    out << r.step << ',' << fmt(r.true_return) << ',' << fmt(r.success) << ',' << r.queries_used << ','
        << fmt(r.reward_loss) << ',' << fmt(r.ensemble_disagreement) << '\n';
  }
}

std::vector<CurveRow> read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCurveHeader) {
    throw std::runtime_error("curve csv: missing or unexpected header");
  }
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw std::runtime_error("curve csv: expected 6 columns: " + line);
    CurveRow r;
    r.step = std::stol(cells[0]);
    r.true_return = std::stod(cells[1]);
    r.success = std::stod(cells[2]);
    r.queries_used = std::stoi(cells[3]);
    r.reward_loss = std::stod(cells[4]);
    r.ensemble_disagreement = std::stod(cells[5]);
    rows.push_back(r);
  }
  return rows;
}

std::string to_jsonl(const QueryLog& q) {
  nlohmann::json j;
  j["query_step"] = q.query_step;
  j["label"] = to_string(q.label);
  j["sum0"] = q.sum0;
  j["sum1"] = q.sum1;
  j["discounted0"] = q.discounted0;
  j["discounted1"] = q.discounted1;
  return j.dump();
}

QueryLog query_log_from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  QueryLog q;
  q.query_step = j.at("query_step").get<std::int64_t>();
  q.label = preference_from_string(j.at("label").get<std::string>());
  q.sum0 = j.at("sum0").get<double>();
  q.sum1 = j.at("sum1").get<double>();
  q.discounted0 = j.value("discounted0", q.sum0);
  q.discounted1 = j.value("discounted1", q.sum1);
  return q;
}

}  // namespace bpref
