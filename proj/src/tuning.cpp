#include "lrpool/tuning.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "lrpool/errors.hpp"
#include "lrpool/rng.hpp"
#include "nlohmann/json.hpp"

namespace lrpool {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace

void TrialRecord::validate() const {
  if (trial_id.size() != 16 ||
      trial_id.find_first_not_of("0123456789abcdef") != std::string::npos)
    throw ParameterError("trial_id must be 16 lowercase hex digits, got '" +
                         trial_id + "'");
  if (status != "success" && status != "failed")
    throw ParameterError("status must be 'success' or 'failed', got '" +
                         status + "'");
  if (status == "success") {
    if (!(val_accuracy >= 0.0 && val_accuracy <= 1.0))
      throw ParameterError("val_accuracy outside [0,1]");
    if (!(test_accuracy >= 0.0 && test_accuracy <= 1.0))
      throw ParameterError("test_accuracy outside [0,1]");
  }
  policy.validate();
}

std::string TrialRecord::to_json() const {
  validate();
  json j;
  j["trial_id"] = trial_id;
  j["policy"] = json::parse(policy.to_json());
  j["seed"] = seed;
  j["task_id"] = task_id;
  j["dataset_id"] = dataset_id;
  j["model_spec_id"] = model_spec_id;
  j["model_id"] = model_id;
  j["status"] = status;
  if (!error_text.empty()) j["error_text"] = error_text;
  j["val_accuracy"] = val_accuracy;
  j["test_accuracy"] = test_accuracy;
  j["val_loss"] = val_loss;
  j["train_loss"] = train_loss;
  j["checkpoint_path"] = checkpoint_path;
  j["prediction_path"] = prediction_path;
  j["test_prediction_path"] = test_prediction_path;
  j["wall_time_seconds"] = wall_time_seconds;
  return j.dump();
}

TrialRecord TrialRecord::from_json(const std::string& text) {
  json j = json::parse(text);
  TrialRecord r;
  r.trial_id = j.at("trial_id").get<std::string>();
  r.policy = LRPolicy::from_json(j.at("policy").dump());
  r.seed = j.value("seed", std::uint64_t{0});
  r.task_id = j.value("task_id", std::string{});
  r.dataset_id = j.value("dataset_id", std::string{});
  r.model_spec_id = j.value("model_spec_id", std::string{});
  r.model_id = j.value("model_id", std::string{});
  r.status = j.value("status", std::string("success"));
  r.error_text = j.value("error_text", std::string{});
  r.val_accuracy = j.value("val_accuracy", 0.0);
  r.test_accuracy = j.value("test_accuracy", 0.0);
  r.val_loss = j.value("val_loss", 0.0);
  r.train_loss = j.value("train_loss", 0.0);
  r.checkpoint_path = j.value("checkpoint_path", std::string{});
  r.prediction_path = j.value("prediction_path", std::string{});
  r.test_prediction_path = j.value("test_prediction_path", std::string{});
  r.wall_time_seconds = j.value("wall_time_seconds", 0.0);
  r.validate();
  return r;
}

std::string make_trial_id(const LRPolicy& policy, std::uint64_t seed,
                          const std::string& task_id) {
  return hex16(fnv1a(policy.to_json() + "|" + std::to_string(seed) + "|" +
                     task_id));
}

std::string to_string(SearchKind k) {
  switch (k) {
    case SearchKind::Grid:
      return "grid";
    case SearchKind::Random:
      return "random";
  }
  throw ParameterError("unknown search kind");
}

SearchKind search_kind_from_string(const std::string& name) {
  if (name == "grid") return SearchKind::Grid;
  if (name == "random") return SearchKind::Random;
  throw ParameterError("unknown search kind: " + name);
}

void TuningSpec::validate() const {
  if (task_id.empty()) throw ParameterError("task_id must not be empty");
  if (candidate_policies.empty())
    throw ParameterError("candidate_policies must not be empty");
  for (const LRPolicy& p : candidate_policies) p.validate();
  if (seeds.empty()) throw ParameterError("seeds must not be empty");
  if (search == SearchKind::Random && n_samples < 1)
    throw ParameterError("random search needs n_samples >= 1");
}

std::vector<std::pair<int, int>> search_pairs(const TuningSpec& spec) {
  spec.validate();
  std::vector<std::pair<int, int>> pairs;
  if (spec.search == SearchKind::Grid) {
    for (std::size_t p = 0; p < spec.candidate_policies.size(); ++p)
      for (std::size_t s = 0; s < spec.seeds.size(); ++s)
        pairs.emplace_back(static_cast<int>(p), static_cast<int>(s));
    return pairs;
  }
  for (int i = 0; i < spec.n_samples; ++i) {
    const auto p = static_cast<int>(rng::below(
        rng::word(spec.search_seed, rng::Stream::SearchSample, i, 0),
        spec.candidate_policies.size()));
    const auto s = static_cast<int>(rng::below(
        rng::word(spec.search_seed, rng::Stream::SearchSample, i, 1),
        spec.seeds.size()));
    pairs.emplace_back(p, s);
  }
  return pairs;
}

std::vector<TrialRecord> load_trials(const std::string& path) {
  // A database that does not exist yet is just empty; only an unreadable
  // or malformed file is an error.
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path);
  if (!in) throw FileParseError(path, 0, "cannot open file");
  std::vector<TrialRecord> ordered;
  std::map<std::string, std::size_t> latest;  // trial_id -> position
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    TrialRecord r;
    try {
      r = TrialRecord::from_json(line);
    } catch (const json::exception& e) {
      throw FileParseError(path, line_no, e.what());
    } catch (const ParameterError& e) {
      throw FileParseError(path, line_no, e.what());
    }
    const auto it = latest.find(r.trial_id);
    if (it == latest.end()) {
      latest[r.trial_id] = ordered.size();
      ordered.push_back(std::move(r));
    } else {
      ordered[it->second] = std::move(r);  // a rerun supersedes the old line
    }
  }
  return ordered;
}

void append_trial(const std::string& path, const TrialRecord& record) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw FileParseError(path, 0, "cannot open file for appending");
  out << record.to_json() << "\n";
  if (!out) throw FileParseError(path, 0, "write failed");
}

TrialRecord best_policy(const std::vector<TrialRecord>& records) {
  const TrialRecord* best = nullptr;
  for (const TrialRecord& r : records) {
    if (r.status != "success") continue;
    if (!best || r.val_accuracy > best->val_accuracy ||
        (r.val_accuracy == best->val_accuracy && r.trial_id < best->trial_id))
      best = &r;
  }
  if (!best) throw EmptyResultError("no successful trials to choose from");
  return *best;
}

std::vector<TrialRecord> recommend_top_n(
    const std::vector<TrialRecord>& records, const TrialQuery& query, int n) {
  if (n < 1) throw ParameterError("n must be >= 1");
  std::vector<TrialRecord> matching;
  for (const TrialRecord& r : records) {
    if (r.status != "success") continue;
    if (query.dataset_id && r.dataset_id != *query.dataset_id) continue;
    if (query.model_spec_id && r.model_spec_id != *query.model_spec_id)
      continue;
    if (query.task_id && r.task_id != *query.task_id) continue;
    matching.push_back(r);
  }
  std::sort(matching.begin(), matching.end(),
            [](const TrialRecord& a, const TrialRecord& b) {
              if (a.val_accuracy != b.val_accuracy)
                return a.val_accuracy > b.val_accuracy;
              return a.trial_id < b.trial_id;
            });
  if (static_cast<int>(matching.size()) > n) matching.resize(n);
  return matching;
}

}  // namespace lrpool
