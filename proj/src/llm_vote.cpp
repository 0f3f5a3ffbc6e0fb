#include "lrpool/llm_vote.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>

#include "lrpool/errors.hpp"
#include "nlohmann/json.hpp"
#include "text_util.hpp"

namespace lrpool {

namespace {

using nlohmann::json;

constexpr int kOptions = 4;

ChoiceRecord parse_record(const std::string& path, std::size_t line_no,
                          const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FileParseError(path, line_no, e.what());
  }
  ChoiceRecord r;
  try {
    r.question_id = j.at("question_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.benchmark_tag = j.at("benchmark_tag").get<std::string>();
    r.option_index = j.at("option_index").get<int>();
    r.option_byte_length = j.at("option_byte_length").get<long long>();
    r.loglikelihood = j.at("loglikelihood").get<double>();
  } catch (const json::exception& e) {
    throw FileParseError(path, line_no, e.what());
  }
  if (r.option_index < 0)
    throw FileParseError(path, line_no, "option_index must be >= 0");
  if (r.option_byte_length < 1)
    throw FileParseError(path, line_no, "option_byte_length must be >= 1");
  if (!std::isfinite(r.loglikelihood))
    throw FileParseError(path, line_no, "loglikelihood must be finite");
  return r;
}

int argmax_scores(const double* scores, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

}  // namespace

IngestResult ingest(const std::vector<std::string>& paths) {
  std::vector<ChoiceRecord> raw;
  for (const std::string& path : paths) {
    std::ifstream in(path);
    if (!in) throw FileParseError(path, 0, "cannot open file");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::strip_cr(line).empty()) continue;
      raw.push_back(parse_record(path, line_no, line));
    }
  }

  // A question survives only when every model that mentions it carries
  // exactly the option set {0,1,2,3}.
  std::map<std::string, std::map<std::string, std::multiset<int>>> options;
  for (const ChoiceRecord& r : raw)
    options[r.question_id][r.model_id].insert(r.option_index);

  std::set<std::string> dropped;
  const std::multiset<int> expected{0, 1, 2, 3};
  for (const auto& [qid, per_model] : options)
    for (const auto& [mid, opts] : per_model)
      if (opts != expected) {
        dropped.insert(qid);
        break;
      }

  IngestResult result;
  for (ChoiceRecord& r : raw)
    if (!dropped.count(r.question_id)) result.records.push_back(std::move(r));
  result.dropped_questions = static_cast<int>(dropped.size());
  result.dropped_ids.assign(dropped.begin(), dropped.end());
  return result;
}

double normalize(const ChoiceRecord& record) {
  if (record.option_byte_length < 1)
    throw ParameterError("option_byte_length must be >= 1, got " +
                         std::to_string(record.option_byte_length));
  return record.loglikelihood / static_cast<double>(record.option_byte_length);
}

std::string to_string(VoteMode m) {
  switch (m) {
    case VoteMode::Soft:
      return "soft";
    case VoteMode::Majority:
      return "majority";
  }
  throw ParameterError("unknown vote mode");
}

VoteMode vote_mode_from_string(const std::string& name) {
  if (name == "soft") return VoteMode::Soft;
  if (name == "majority") return VoteMode::Majority;
  throw ParameterError("unknown vote mode: " + name);
}

std::string to_string(CombineRule r) {
  switch (r) {
    case CombineRule::NormalizedScore:
      return "score";
    case CombineRule::Softmax:
      return "softmax";
  }
  throw ParameterError("unknown combine rule");
}

CombineRule combine_rule_from_string(const std::string& name) {
  if (name == "score") return CombineRule::NormalizedScore;
  if (name == "softmax") return CombineRule::Softmax;
  throw ParameterError("unknown combine rule: " + name);
}

int ensemble_answer(const std::vector<ChoiceRecord>& question_records,
                    const std::vector<std::string>& model_ids, VoteMode mode,
                    CombineRule rule) {
  if (question_records.empty())
    throw ParameterError("no records for the question");
  if (model_ids.empty()) throw ParameterError("no model ids given");
  const std::string& qid = question_records.front().question_id;

  // model -> 4 normalized option scores
  std::map<std::string, std::array<double, kOptions>> scores;
  std::map<std::string, int> seen;
  for (const ChoiceRecord& r : question_records) {
    if (r.question_id != qid)
      throw ParameterError("records mix question ids ('" + qid + "' vs '" +
                           r.question_id + "')");
    if (r.option_index >= kOptions)
      throw ParameterError("option_index " + std::to_string(r.option_index) +
                           " out of range for question '" + qid + "'");
    scores[r.model_id][r.option_index] = normalize(r);
    ++seen[r.model_id];
  }
  for (const std::string& mid : model_ids) {
    auto it = seen.find(mid);
    if (it == seen.end())
      throw ParameterError("model '" + mid + "' has no records for question '" +
                           qid + "'");
    if (it->second != kOptions)
      throw ParameterError("model '" + mid + "' has " +
                           std::to_string(it->second) +
                           " option records for question '" + qid +
                           "', need " + std::to_string(kOptions));
  }

  // Per-model per-option combining values.
  std::vector<std::array<double, kOptions>> values;
  for (const std::string& mid : model_ids) {
    std::array<double, kOptions> v = scores.at(mid);
    if (rule == CombineRule::Softmax) {
      const double m = *std::max_element(v.begin(), v.end());
      double sum = 0.0;
      for (double& x : v) {
        x = std::exp(x - m);
        sum += x;
      }
      for (double& x : v) x /= sum;
    }
    values.push_back(v);
  }

  std::array<double, kOptions> summed{};
  for (const auto& v : values)
    for (int o = 0; o < kOptions; ++o) summed[o] += v[o];

  if (mode == VoteMode::Soft)
    return argmax_scores(summed.data(), kOptions);

  std::array<int, kOptions> votes{};
  for (const auto& v : values) ++votes[argmax_scores(v.data(), kOptions)];
  const int top = *std::max_element(votes.begin(), votes.end());
  int winner = -1;
  for (int o = 0; o < kOptions; ++o) {
    if (votes[o] != top) continue;
    if (winner < 0 || summed[o] > summed[winner]) winner = o;
  }
  return winner;
}

GoldKey load_gold_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileParseError(path, 0, "cannot open file");
  std::string line;
  if (!std::getline(in, line) ||
      detail::strip_cr(line) != "question_id,answer_index")
    throw FileParseError(path, 1,
                         "expected header 'question_id,answer_index'");
  GoldKey gold;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = detail::split(detail::strip_cr(line), ',');
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != 2)
      throw FileParseError(path, line_no, "expected 2 columns");
    long idx;
    if (!detail::parse_long(cells[1], idx) || idx < 0 || idx >= kOptions)
      throw FileParseError(path, line_no,
                           "answer_index must be an integer in [0,4)");
    gold.answer[std::string(cells[0])] = static_cast<int>(idx);
  }
  return gold;
}

std::vector<BenchmarkScore> score(const std::vector<AnsweredQuestion>& answers,
                                  const GoldKey& gold) {
  if (answers.empty())
    throw ParameterError("no answered questions to score");
  std::map<std::string, std::pair<int, int>> per_tag;  // correct, total
  for (const AnsweredQuestion& a : answers) {
    auto it = gold.answer.find(a.question_id);
    if (it == gold.answer.end())
      throw ParameterError("question '" + a.question_id +
                           "' missing from the gold key");
    auto& [correct, total] = per_tag[a.benchmark_tag];
    ++total;
    if (a.answer == it->second) ++correct;
  }
  std::vector<BenchmarkScore> scores;
  for (const auto& [tag, counts] : per_tag)
    scores.push_back({tag,
                      static_cast<double>(counts.first) / counts.second,
                      counts.second});
  return scores;
}

std::vector<BenchmarkScore> run_llm_vote(const IngestResult& ingested,
                                         const GoldKey& gold, VoteMode mode,
                                         CombineRule rule,
                                         std::vector<AnsweredQuestion>* answers_out) {
  std::set<std::string> model_set;
  for (const ChoiceRecord& r : ingested.records) model_set.insert(r.model_id);
  const std::vector<std::string> model_ids(model_set.begin(), model_set.end());

  std::map<std::string, std::vector<ChoiceRecord>> by_question;
  std::map<std::string, std::string> tag_of;
  for (const ChoiceRecord& r : ingested.records) {
    auto [it, inserted] = tag_of.emplace(r.question_id, r.benchmark_tag);
    if (!inserted && it->second != r.benchmark_tag)
      throw ParameterError("question '" + r.question_id +
                           "' appears under two benchmark tags");
    by_question[r.question_id].push_back(r);
  }

  std::vector<AnsweredQuestion> answers;
  for (const auto& [qid, records] : by_question)
    answers.push_back(
        {qid, tag_of.at(qid), ensemble_answer(records, model_ids, mode, rule)});
  if (answers_out) *answers_out = answers;
  return score(answers, gold);
}

void write_llm_scores_csv(const std::vector<BenchmarkScore>& scores,
                          const std::string& mode_label,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileParseError(path, 0, "cannot open file for writing");
  out << "benchmark_tag,mode,accuracy,n_questions\n";
  for (const BenchmarkScore& s : scores)
    out << s.benchmark_tag << "," << mode_label << ","
        << detail::format_double_short(s.accuracy) << "," << s.n_questions
        << "\n";
  if (!out) throw FileParseError(path, 0, "write failed");
}

}  // namespace lrpool
