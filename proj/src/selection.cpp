#include "lrpool/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "lrpool/errors.hpp"
#include "lrpool/rng.hpp"
#include "nlohmann/json.hpp"
#include "text_util.hpp"

namespace lrpool {

namespace {

using nlohmann::json;

void check_team_size(const ModelPool& pool, int k, int k_min) {
  if (k < k_min || k > pool.size())
    throw ParameterError("team size " + std::to_string(k) +
                         " outside [" + std::to_string(k_min) + ", " +
                         std::to_string(pool.size()) + "]");
}

void check_enumerable(const ModelPool& pool) {
  if (pool.size() > kMaxEnumerationPool)
    throw EnumerationLimitError(
        "pool of " + std::to_string(pool.size()) +
        " models exceeds the exhaustive-enumeration cap of " +
        std::to_string(kMaxEnumerationPool));
}

// Soft-vote correct count straight from a summed-probability buffer
// (argmax of the sum equals argmax of the mean).
int correct_of_sums(const std::vector<double>& sums,
                    const LabeledEvalSet& eval, int C) {
  int correct = 0;
  for (std::size_t i = 0; i < eval.labels.size(); ++i)
    if (argmax_lowest(sums.data() + i * C, C) == eval.labels[i]) ++correct;
  return correct;
}

void add_member(std::vector<double>& dst, const std::vector<double>& src,
                const PredictionMatrix& m) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] + m.probs[i];
}

std::vector<std::string> ids_of(const ModelPool& pool,
                                const std::vector<int>& indices) {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(pool.ids[i]);
  return out;
}

// Per-member validation failure flags (argmax != label).
std::vector<std::vector<char>> failure_flags(const ModelPool& pool) {
  const int C = pool.eval.n_classes;
  std::vector<std::vector<char>> fails(pool.size());
  for (int m = 0; m < pool.size(); ++m) {
    const PredictionMatrix& pm = pool.members[m];
    fails[m].resize(pm.n_samples);
    for (int i = 0; i < pm.n_samples; ++i)
      fails[m][i] =
          argmax_lowest(pm.probs.data() + static_cast<std::size_t>(i) * C,
                        C) != pool.eval.labels[i];
  }
  return fails;
}

// lambda_f over the focal's failure set given per-sample team failure
// counts; absent when the focal never fails.
std::optional<double> lambda_for_focal(const std::vector<char>& focal_fails,
                                       const std::vector<int>& fail_count,
                                       int team_size) {
  double p1 = 0.0, p2 = 0.0;
  int n_failures = 0;
  const double M = team_size;
  for (std::size_t s = 0; s < focal_fails.size(); ++s) {
    if (!focal_fails[s]) continue;
    ++n_failures;
    const double k = fail_count[s];
    p1 += k / M;
    p2 += k * (k - 1.0) / (M * (M - 1.0));
  }
  if (n_failures == 0) return std::nullopt;
  p1 /= n_failures;
  p2 /= n_failures;
  return 1.0 - p2 / p1;
}

double fq_from_lambdas(const std::vector<std::optional<double>>& lambdas) {
  double sum = 0.0;
  int present = 0;
  for (const auto& l : lambdas)
    if (l) {
      sum += *l;
      ++present;
    }
  // Every focal failure-free: nothing to diversify over.
  return present == 0 ? 0.0 : 1.0 - sum / present;
}

int member_correct(const ModelPool& pool, int index) {
  const PredictionMatrix& m = pool.members[index];
  int correct = 0;
  for (int i = 0; i < m.n_samples; ++i)
    if (argmax_lowest(m.probs.data() +
                          static_cast<std::size_t>(i) * m.n_classes,
                      m.n_classes) == pool.eval.labels[i])
      ++correct;
  return correct;
}

int best_single_index(const ModelPool& pool) {
  int best = 0;
  int best_correct = member_correct(pool, 0);
  for (int i = 1; i < pool.size(); ++i) {
    const int c = member_correct(pool, i);
    if (c > best_correct) {
      best = i;
      best_correct = c;
    }
  }
  return best;
}

}  // namespace

void ModelPool::add(PredictionMatrix m) {
  m.validate();
  if (m.model_id.empty()) throw ParameterError("pool member needs a model_id");
  const auto pos = std::lower_bound(ids.begin(), ids.end(), m.model_id);
  if (pos != ids.end() && *pos == m.model_id)
    throw ParameterError("duplicate model_id '" + m.model_id + "' in pool");
  const auto offset = pos - ids.begin();
  ids.insert(pos, m.model_id);
  members.insert(members.begin() + offset, std::move(m));
}

int ModelPool::index_of(const std::string& id) const {
  const auto pos = std::lower_bound(ids.begin(), ids.end(), id);
  if (pos == ids.end() || *pos != id) return -1;
  return static_cast<int>(pos - ids.begin());
}

const PredictionMatrix& ModelPool::member(const std::string& id) const {
  const int i = index_of(id);
  if (i < 0) throw ParameterError("model_id '" + id + "' not in pool");
  return members[i];
}

void ModelPool::validate() const {
  if (ids.empty()) throw ParameterError("empty model pool");
  if (ids.size() != members.size())
    throw ParameterError("pool id/member lists out of sync");
  eval.validate();
  for (std::size_t i = 0; i < members.size(); ++i) {
    members[i].validate();
    if (members[i].model_id != ids[i])
      throw ParameterError("pool id order out of sync");
    if (members[i].n_samples != static_cast<int>(eval.labels.size()) ||
        members[i].n_classes != eval.n_classes)
      throw ParameterError("member '" + ids[i] +
                           "' shape does not match the eval set");
    if (members[i].split_tag != members[0].split_tag)
      throw ParameterError("pool members mix split tags");
  }
  if (!std::is_sorted(ids.begin(), ids.end()) ||
      std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw ParameterError("pool ids must be unique");
}

EnsembleTeam brute_force(const ModelPool& pool, int k) {
  pool.validate();
  check_team_size(pool, k, 1);
  check_enumerable(pool);

  const int n = pool.size();
  const int C = pool.eval.n_classes;
  const std::size_t cells = pool.members[0].probs.size();
  std::vector<std::vector<double>> sums(k + 1,
                                        std::vector<double>(cells, 0.0));
  std::vector<int> current(k), best;
  int best_correct = -1;

  // Lexicographic combination walk; the first maximum seen is the
  // lexicographically smallest id set.
  auto walk = [&](auto&& self, int depth, int from) -> void {
    for (int i = from; i <= n - (k - depth); ++i) {
      current[depth] = i;
      add_member(sums[depth + 1], sums[depth], pool.members[i]);
      if (depth + 1 == k) {
        const int correct = correct_of_sums(sums[depth + 1], pool.eval, C);
        if (correct > best_correct) {
          best_correct = correct;
          best = current;
        }
      } else {
        self(self, depth + 1, i + 1);
      }
    }
  };
  walk(walk, 0, 0);

  EnsembleTeam team;
  team.member_ids = ids_of(pool, best);
  team.val_accuracy =
      static_cast<double>(best_correct) / pool.eval.labels.size();
  return team;
}

EnsembleTeam greedy(const ModelPool& pool, int k) {
  pool.validate();
  check_team_size(pool, k, 1);

  const int n = pool.size();
  const int C = pool.eval.n_classes;
  const std::size_t cells = pool.members[0].probs.size();
  std::vector<char> used(n, 0);
  std::vector<int> chosen;

  const int first = best_single_index(pool);
  used[first] = 1;
  chosen.push_back(first);
  std::vector<double> sums(pool.members[first].probs.begin(),
                           pool.members[first].probs.end());
  std::vector<double> candidate(cells);
  int team_correct = member_correct(pool, first);

  while (static_cast<int>(chosen.size()) < k) {
    int pick = -1;
    int pick_correct = -1;
    // Additions proceed even when the best candidate lowers accuracy, so
    // the team always reaches k members. Scanning in id order makes ties
    // land on the lowest id.
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      add_member(candidate, sums, pool.members[i]);
      const int correct = correct_of_sums(candidate, pool.eval, C);
      if (correct > pick_correct) {
        pick = i;
        pick_correct = correct;
      }
    }
    used[pick] = 1;
    chosen.push_back(pick);
    add_member(sums, sums, pool.members[pick]);
    team_correct = pick_correct;
  }

  std::sort(chosen.begin(), chosen.end());
  EnsembleTeam team;
  team.member_ids = ids_of(pool, chosen);
  team.val_accuracy =
      static_cast<double>(team_correct) / pool.eval.labels.size();
  return team;
}

RandomSelectResult random_select(const ModelPool& pool, int k, int trials,
                                 std::uint64_t seed) {
  pool.validate();
  check_team_size(pool, k, 1);
  if (trials < 1) throw ParameterError("trials must be >= 1");

  const int n = pool.size();
  const int C = pool.eval.n_classes;
  const std::size_t cells = pool.members[0].probs.size();
  RandomSelectResult result;
  result.teams.reserve(trials);
  std::vector<int> deck(n);
  std::vector<double> sums(cells);
  std::vector<double> accs(trials);

  for (int r = 0; r < trials; ++r) {
    std::iota(deck.begin(), deck.end(), 0);
    for (int j = 0; j < k; ++j) {
      const auto pick = j + static_cast<int>(rng::below(
                                rng::word(seed, rng::Stream::RandomTeams, r, j),
                                n - j));
      std::swap(deck[j], deck[pick]);
    }
    std::vector<int> indices(deck.begin(), deck.begin() + k);
    std::sort(indices.begin(), indices.end());

    std::fill(sums.begin(), sums.end(), 0.0);
    for (int i : indices) add_member(sums, sums, pool.members[i]);
    const int correct = correct_of_sums(sums, pool.eval, C);

    EnsembleTeam team;
    team.member_ids = ids_of(pool, indices);
    team.val_accuracy =
        static_cast<double>(correct) / pool.eval.labels.size();
    accs[r] = team.val_accuracy;
    result.teams.push_back(std::move(team));
  }

  double mean = 0.0;
  for (double a : accs) mean += a;
  mean /= trials;
  double var = 0.0;
  for (double a : accs) var += (a - mean) * (a - mean);
  result.mean_accuracy = mean;
  result.std_accuracy = std::sqrt(var / trials);
  return result;
}

FocalDiversityReport focal_diversity(
    const ModelPool& pool, const std::vector<std::string>& team_ids) {
  pool.validate();
  if (team_ids.size() < 2)
    throw ParameterError("focal diversity needs a team of >= 2 members");

  std::vector<int> indices;
  for (const std::string& id : team_ids) {
    const int i = pool.index_of(id);
    if (i < 0) throw ParameterError("team member '" + id + "' not in pool");
    indices.push_back(i);
  }
  std::vector<int> sorted_indices = indices;
  std::sort(sorted_indices.begin(), sorted_indices.end());
  if (std::adjacent_find(sorted_indices.begin(), sorted_indices.end()) !=
      sorted_indices.end())
    throw ParameterError("team has duplicate member ids");

  const auto fails = failure_flags(pool);
  const int M = static_cast<int>(indices.size());
  const int nv = static_cast<int>(pool.eval.labels.size());
  std::vector<int> fail_count(nv, 0);
  for (int i : indices)
    for (int s = 0; s < nv; ++s) fail_count[s] += fails[i][s];

  FocalDiversityReport report;
  std::vector<std::optional<double>> lambdas;
  for (std::size_t f = 0; f < indices.size(); ++f) {
    const auto l = lambda_for_focal(fails[indices[f]], fail_count, M);
    report.per_focal_lambda.emplace_back(team_ids[f], l);
    lambdas.push_back(l);
  }
  report.fq_gd_score = fq_from_lambdas(lambdas);

  const int C = pool.eval.n_classes;
  std::vector<double> sums(pool.members[0].probs.size(), 0.0);
  for (int i : indices) add_member(sums, sums, pool.members[i]);
  report.team.member_ids = ids_of(pool, sorted_indices);
  report.team.val_accuracy =
      static_cast<double>(correct_of_sums(sums, pool.eval, C)) / nv;
  report.team.fq_gd_score = report.fq_gd_score;
  return report;
}

EnsembleTeam focal_select(const ModelPool& pool, int k) {
  pool.validate();
  check_team_size(pool, k, 2);
  check_enumerable(pool);

  const int n = pool.size();
  const int C = pool.eval.n_classes;
  const int nv = static_cast<int>(pool.eval.labels.size());
  const std::size_t cells = pool.members[0].probs.size();
  const auto fails = failure_flags(pool);

  std::vector<std::vector<double>> sums(k + 1,
                                        std::vector<double>(cells, 0.0));
  std::vector<int> fail_count(nv, 0);  // ints back-track exactly
  std::vector<int> current(k), best;
  double best_fq = std::numeric_limits<double>::infinity();
  int best_correct = -1;
  std::vector<std::optional<double>> lambdas(k);

  auto walk = [&](auto&& self, int depth, int from) -> void {
    for (int i = from; i <= n - (k - depth); ++i) {
      current[depth] = i;
      add_member(sums[depth + 1], sums[depth], pool.members[i]);
      for (int s = 0; s < nv; ++s) fail_count[s] += fails[i][s];
      if (depth + 1 == k) {
        for (int f = 0; f < k; ++f)
          lambdas[f] = lambda_for_focal(fails[current[f]], fail_count, k);
        const double fq = fq_from_lambdas(lambdas);
        if (fq < best_fq) {
          best_fq = fq;
          best_correct = correct_of_sums(sums[k], pool.eval, C);
          best = current;
        } else if (fq == best_fq) {
          const int correct = correct_of_sums(sums[k], pool.eval, C);
          if (correct > best_correct) {
            best_correct = correct;
            best = current;
          }
        }
      } else {
        self(self, depth + 1, i + 1);
      }
      for (int s = 0; s < nv; ++s) fail_count[s] -= fails[i][s];
    }
  };
  walk(walk, 0, 0);

  EnsembleTeam team;
  team.member_ids = ids_of(pool, best);
  team.val_accuracy = static_cast<double>(best_correct) / nv;
  team.fq_gd_score = best_fq;
  return team;
}

std::string to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::BruteForce:
      return "brute";
    case SelectionMethod::Greedy:
      return "greedy";
    case SelectionMethod::Random:
      return "random";
    case SelectionMethod::FocalDiversity:
      return "focal";
  }
  throw ParameterError("unknown selection method");
}

SelectionMethod selection_method_from_string(const std::string& name) {
  if (name == "brute") return SelectionMethod::BruteForce;
  if (name == "greedy") return SelectionMethod::Greedy;
  if (name == "random") return SelectionMethod::Random;
  if (name == "focal") return SelectionMethod::FocalDiversity;
  throw ParameterError("unknown selection method: " + name);
}

namespace {

double team_test_accuracy(const ModelPool& test_pool,
                          const std::vector<std::string>& member_ids) {
  std::vector<PredictionMatrix> members;
  for (const std::string& id : member_ids)
    members.push_back(test_pool.member(id));
  return accuracy(soft_vote(members), test_pool.eval);
}

EnsembleTeam best_single_team(const ModelPool& pool) {
  const int i = best_single_index(pool);
  EnsembleTeam team;
  team.member_ids = {pool.ids[i]};
  team.val_accuracy = static_cast<double>(member_correct(pool, i)) /
                      pool.eval.labels.size();
  return team;
}

SweepRow make_row(std::string method, int size, EnsembleTeam team,
                  const ModelPool& pool, const ModelPool* test_pool) {
  SweepRow row;
  row.method = std::move(method);
  row.size = size;
  row.val_acc = team.val_accuracy;
  if (test_pool)
    row.test_acc = team_test_accuracy(*test_pool, team.member_ids);
  if (team.member_ids.size() >= 2) {
    if (!team.fq_gd_score)
      team.fq_gd_score =
          focal_diversity(pool, team.member_ids).fq_gd_score;
    row.fq_gd = team.fq_gd_score;
  }
  row.team = std::move(team);
  return row;
}

}  // namespace

SweepReport selection_sweep(const ModelPool& pool, const ModelPool* test_pool,
                            const std::vector<SelectionMethod>& methods,
                            const std::vector<int>& sizes, int random_trials,
                            std::uint64_t seed) {
  pool.validate();
  if (test_pool) {
    test_pool->validate();
    for (const std::string& id : pool.ids)
      if (test_pool->index_of(id) < 0)
        throw ParameterError("test pool missing model_id '" + id + "'");
  }
  if (methods.empty()) throw ParameterError("no selection methods given");
  if (sizes.empty()) throw ParameterError("no team sizes given");

  SweepReport report;
  report.rows.push_back(
      make_row("best_single", 1, best_single_team(pool), pool, test_pool));

  for (SelectionMethod method : methods) {
    for (int k : sizes) {
      if (method == SelectionMethod::Random) {
        const auto sub_seed = rng::word(seed, rng::Stream::RandomTeams, k);
        RandomSelectResult r = random_select(pool, k, random_trials, sub_seed);
        SweepRow row;
        row.method = to_string(method);
        row.size = k;
        row.val_acc = r.mean_accuracy;
        row.val_std = r.std_accuracy;
        if (test_pool) {
          double mean_test = 0.0;
          for (const EnsembleTeam& t : r.teams)
            mean_test += team_test_accuracy(*test_pool, t.member_ids);
          row.test_acc = mean_test / r.teams.size();
        }
        row.sampled = std::move(r.teams);
        report.rows.push_back(std::move(row));
        continue;
      }
      EnsembleTeam team;
      if (k == 1) {
        team = best_single_team(pool);  // all non-random methods coincide
      } else if (method == SelectionMethod::BruteForce) {
        team = brute_force(pool, k);
      } else if (method == SelectionMethod::Greedy) {
        team = greedy(pool, k);
      } else {
        team = focal_select(pool, k);
      }
      report.rows.push_back(
          make_row(to_string(method), k, std::move(team), pool, test_pool));
    }
  }

  std::vector<std::string> all_ids = pool.ids;
  EnsembleTeam entire;
  entire.member_ids = all_ids;
  {
    std::vector<double> sums(pool.members[0].probs.size(), 0.0);
    for (const PredictionMatrix& m : pool.members)
      for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += m.probs[i];
    entire.val_accuracy =
        static_cast<double>(correct_of_sums(sums, pool.eval,
                                            pool.eval.n_classes)) /
        pool.eval.labels.size();
  }
  report.rows.push_back(make_row("entire_ensemble", pool.size(),
                                 std::move(entire), pool, test_pool));
  return report;
}

void write_sweep_csv(const SweepReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileParseError(path, 0, "cannot open file for writing");
  out << "method,size,val_acc,test_acc,fq_gd\n";
  for (const SweepRow& row : report.rows) {
    out << row.method << "," << row.size << ","
        << detail::format_double_short(row.val_acc) << ",";
    if (row.test_acc) out << detail::format_double_short(*row.test_acc);
    out << ",";
    if (row.fq_gd) out << detail::format_double_short(*row.fq_gd);
    out << "\n";
  }
  if (!out) throw FileParseError(path, 0, "write failed");
}

void write_sweep_teams_json(const SweepReport& report,
                            const std::string& path) {
  json rows = json::array();
  for (const SweepRow& row : report.rows) {
    json r;
    r["method"] = row.method;
    r["size"] = row.size;
    r["val_acc"] = row.val_acc;
    if (row.test_acc) r["test_acc"] = *row.test_acc;
    if (row.fq_gd) r["fq_gd"] = *row.fq_gd;
    r["member_ids"] = row.team.member_ids;
    if (row.val_std) r["val_std"] = *row.val_std;
    if (!row.sampled.empty()) {
      json teams = json::array();
      for (const EnsembleTeam& t : row.sampled)
        teams.push_back({{"member_ids", t.member_ids},
                         {"val_acc", t.val_accuracy}});
      r["sampled_teams"] = std::move(teams);
    }
    rows.push_back(std::move(r));
  }
  std::ofstream out(path);
  if (!out) throw FileParseError(path, 0, "cannot open file for writing");
  out << json{{"rows", std::move(rows)}}.dump(2) << "\n";
  if (!out) throw FileParseError(path, 0, "write failed");
}

}  // namespace lrpool
