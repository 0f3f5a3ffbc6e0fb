// Command-line front door: tune -> train -> predict -> select -> vote plus
// the schedule/variance/diversity/llm sub-pipelines.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lrpool/errors.hpp"
#include "lrpool/llm_vote.hpp"
#include "lrpool/pipeline.hpp"
#include "lrpool/variance.hpp"
#include "nlohmann/json.hpp"

namespace {

using namespace lrpool;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stoi(cell));
    } catch (const std::exception&) {
      throw ParameterError("bad integer '" + cell + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw ParameterError("empty integer list");
  return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

struct Options {
  std::string config;
  std::string out;
  std::string run;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
  std::string method = "brute";
  int size = 2;
  int trials = 30;
  bool trials_given = false;
  std::string mode = "soft";
  std::string combine = "score";
  std::string split = "val";

  // schedule / train
  std::string policy_file;
  std::string task_file;
  int steps = 0;

  // predict / diversity / vote / llm-vote
  std::string checkpoint;
  std::vector<std::string> files;
  std::string labels_file;
  std::string gold;
  std::string team;
  std::string methods = "brute,greedy,random,focal";
  std::string sizes;
  std::string model_id;
  bool include_output_layer = false;
};

LRPolicy policy_from_options(const Options& opt) {
  if (opt.policy_file.empty())
    throw ParameterError("--policy <policy.json> is required");
  // A value starting with '{' is inline JSON; no real path looks like that.
  if (opt.policy_file.front() == '{')
    return LRPolicy::from_json(opt.policy_file);
  return LRPolicy::from_json(read_file(opt.policy_file));
}

std::vector<TrialRecord> load_run_records(const RunLayout& layout) {
  if (!std::filesystem::exists(layout.trials_path()))
    throw FileParseError(layout.trials_path(), 0, "run has no trials.jsonl");
  return load_trials(layout.trials_path());
}

int cmd_schedule(const Options& opt) {
  const LRPolicy policy = policy_from_options(opt);
  if (opt.steps < 1) throw ParameterError("--steps must be >= 1");
  const auto schedule = render_schedule(policy, {opt.steps});
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!opt.out.empty()) {
    file.open(opt.out);
    if (!file) throw FileParseError(opt.out, 0, "cannot open file for writing");
    out = &file;
  }
  *out << "t,lr\n";
  char buf[64];
  for (const auto& [t, lr] : schedule) {
    std::snprintf(buf, sizeof(buf), "%.17g", lr);
    *out << t << "," << buf << "\n";
  }
  return 0;
}

int cmd_tune(const Options& opt) {
  if (opt.config.empty()) throw ParameterError("--config is required");
  if (opt.out.empty()) throw ParameterError("--out <run dir> is required");
  TuneConfig cfg = load_tune_config(opt.config);
  if (opt.seed_given) cfg.spec.seeds = {opt.seed};
  RunLayout layout{opt.out};
  const SearchOutcome outcome = run_search(cfg.spec, cfg.task, layout, opt.jobs);
  int ok = 0;
  for (const TrialRecord& r : outcome.records)
    if (r.status == "success") ++ok;
  std::cout << "trials=" << outcome.records.size() << " success=" << ok
            << " failed=" << outcome.failed << " skipped=" << outcome.skipped
            << "\n";
  std::cout << "db=" << layout.trials_path() << "\n";
  return 0;
}

int cmd_train(const Options& opt) {
  if (opt.task_file.empty()) throw ParameterError("--task is required");
  if (opt.out.empty()) throw ParameterError("--out <run dir> is required");
  TaskConfig task = TaskConfig::from_json(read_file(opt.task_file));
  TuningSpec spec;
  spec.task_id = task.task_id;
  spec.candidate_policies = {policy_from_options(opt)};
  spec.seeds = {opt.seed};
  RunLayout layout{opt.out};
  const SearchOutcome outcome = run_search(spec, task, layout, 1);
  const TrialRecord& r = outcome.records.front();
  std::cout << "trial_id=" << r.trial_id << " model_id=" << r.model_id
            << " status=" << r.status;
  if (r.status == "success")
    std::cout << " val_acc=" << r.val_accuracy
              << " test_acc=" << r.test_accuracy;
  else
    std::cout << " error=\"" << r.error_text << "\"";
  std::cout << "\n";
  return 0;
}

int cmd_predict(const Options& opt) {
  if (opt.checkpoint.empty()) throw ParameterError("--checkpoint is required");
  if (opt.task_file.empty()) throw ParameterError("--task is required");
  if (opt.out.empty()) throw ParameterError("--out is required");
  const TrainedModel model = load_checkpoint(opt.checkpoint);
  const TaskConfig task = TaskConfig::from_json(read_file(opt.task_file));
  const Dataset data = task.build_dataset();
  const PredictionMatrix m =
      predict_proba(model, data, split_from_string(opt.split), opt.model_id);
  write_prediction_csv(m, opt.out);
  std::cout << "wrote " << opt.out << " (n=" << m.n_samples
            << ", c=" << m.n_classes << ")\n";
  return 0;
}

void print_team(const std::string& method, const EnsembleTeam& team) {
  std::cout << "method=" << method << " size=" << team.member_ids.size()
            << " val_acc=" << team.val_accuracy;
  if (team.test_accuracy) std::cout << " test_acc=" << *team.test_accuracy;
  if (team.fq_gd_score) std::cout << " fq_gd=" << *team.fq_gd_score;
  std::cout << " members=";
  for (std::size_t i = 0; i < team.member_ids.size(); ++i) {
    if (i) std::cout << "+";
    std::cout << team.member_ids[i];
  }
  std::cout << "\n";
}

int cmd_select(const Options& opt) {
  if (opt.run.empty()) throw ParameterError("--run <run dir> is required");
  RunLayout layout{opt.run};
  const LoadedPools pools = load_pools(layout, load_run_records(layout));
  const SelectionMethod method = selection_method_from_string(opt.method);
  if (method == SelectionMethod::Random) {
    const RandomSelectResult r =
        random_select(pools.val, opt.size, opt.trials, opt.seed);
    std::cout << "method=random size=" << opt.size
              << " trials=" << opt.trials << " mean_acc=" << r.mean_accuracy
              << " std_acc=" << r.std_accuracy << "\n";
    return 0;
  }
  EnsembleTeam team;
  if (method == SelectionMethod::BruteForce)
    team = brute_force(pools.val, opt.size);
  else if (method == SelectionMethod::Greedy)
    team = greedy(pools.val, opt.size);
  else
    team = focal_select(pools.val, opt.size);
  print_team(opt.method, team);
  return 0;
}

int cmd_sweep(const Options& opt) {
  if (opt.run.empty()) throw ParameterError("--run <run dir> is required");
  RunLayout layout{opt.run};
  const LoadedPools pools = load_pools(layout, load_run_records(layout));

  std::vector<SelectionMethod> methods;
  for (const std::string& name : parse_string_list(opt.methods))
    methods.push_back(selection_method_from_string(name));
  std::vector<int> sizes;
  if (opt.sizes.empty())
    for (int k = 1; k <= pools.val.size(); ++k) sizes.push_back(k);
  else
    sizes = parse_int_list(opt.sizes);

  const SweepReport report = selection_sweep(pools.val, &pools.test, methods,
                                             sizes, opt.trials, opt.seed);
  const std::string dir = opt.out.empty() ? layout.reports_dir() : opt.out;
  std::filesystem::create_directories(dir);
  write_sweep_csv(report, dir + "/sweep.csv");
  write_sweep_teams_json(report, dir + "/sweep_teams.json");
  std::cout << "wrote " << dir << "/sweep.csv (" << report.rows.size()
            << " rows)\n";
  return 0;
}

int cmd_vote(const Options& opt) {
  if (opt.files.size() < 1)
    throw ParameterError("need at least one prediction CSV");
  std::vector<PredictionMatrix> members;
  for (const std::string& path : opt.files)
    members.push_back(read_prediction_csv(path));
  const VoteMode mode = vote_mode_from_string(opt.mode);

  LabeledEvalSet eval;
  bool have_labels = !opt.labels_file.empty();
  if (have_labels) {
    eval.labels = read_labels_csv(opt.labels_file);
    eval.n_classes = members.front().n_classes;
  }

  if (mode == VoteMode::Soft) {
    const PredictionMatrix combined = soft_vote(members);
    if (!opt.out.empty()) write_prediction_csv(combined, opt.out);
    if (have_labels)
      std::cout << "accuracy=" << accuracy(combined, eval) << "\n";
  } else {
    const std::vector<int> votes = majority_vote(members);
    if (!opt.out.empty()) write_labels_csv(votes, opt.out);
    if (have_labels)
      std::cout << "accuracy=" << labels_accuracy(votes, eval) << "\n";
  }
  if (!opt.out.empty()) std::cout << "wrote " << opt.out << "\n";
  return 0;
}

int cmd_simvar(const Options& opt) {
  VarianceSimConfig cfg;
  if (!opt.config.empty())
    cfg = VarianceSimConfig::from_json(read_file(opt.config));
  if (opt.seed_given) cfg.seed = opt.seed;
  if (opt.trials_given) cfg.trials = opt.trials;
  const VarianceCompareReport report = compare(cfg);
  if (!opt.out.empty()) write_compare_csv(report, opt.out);
  const VarianceCompareStep& last = report.steps.back();
  std::cout << (report.consistent ? "consistent" : "inconsistent")
            << " predicted=" << last.predicted
            << " empirical=" << last.empirical << " ci_lo=" << last.ci_lo
            << " ci_hi=" << last.ci_hi << " z=" << report.z_gap << "\n";
  if (!opt.out.empty()) std::cout << "wrote " << opt.out << "\n";
  return 0;
}

int cmd_diversity(const Options& opt) {
  if (!opt.team.empty()) {
    if (opt.run.empty())
      throw ParameterError("--team needs --run <run dir>");
    RunLayout layout{opt.run};
    const LoadedPools pools = load_pools(layout, load_run_records(layout));
    // Accept the a+b+c form that `select` prints as well as a,b,c.
    std::string team = opt.team;
    std::replace(team.begin(), team.end(), '+', ',');
    const FocalDiversityReport report =
        focal_diversity(pools.val, parse_string_list(team));
    std::cout << "fq_gd=" << report.fq_gd_score << "\n";
    for (const auto& [id, lambda] : report.per_focal_lambda) {
      std::cout << "lambda." << id << "=";
      if (lambda)
        std::cout << *lambda;
      else
        std::cout << "n/a (no validation failures)";
      std::cout << "\n";
    }
    return 0;
  }
  if (opt.files.size() < 2)
    throw ParameterError("need >= 2 checkpoints (or --run with --team)");
  std::vector<TrainedModel> models;
  for (const std::string& path : opt.files)
    models.push_back(load_checkpoint(path));
  for (std::size_t a = 0; a < models.size(); ++a)
    for (std::size_t b = a + 1; b < models.size(); ++b)
      std::cout << "cosine," << opt.files[a] << "," << opt.files[b] << ","
                << parameter_cosine(models[a], models[b],
                                    !opt.include_output_layer)
                << "\n";
  return 0;
}

int cmd_llm_vote(const Options& opt) {
  if (opt.files.empty()) throw ParameterError("need >= 1 JSONL log file");
  if (opt.gold.empty()) throw ParameterError("--gold <gold.csv> is required");
  const IngestResult ingested = ingest(opt.files);
  const GoldKey gold = load_gold_csv(opt.gold);
  const VoteMode mode = vote_mode_from_string(opt.mode);
  const CombineRule rule = combine_rule_from_string(opt.combine);
  const std::vector<BenchmarkScore> scores =
      run_llm_vote(ingested, gold, mode, rule);
  std::cout << "dropped_questions=" << ingested.dropped_questions << "\n";
  for (const BenchmarkScore& s : scores)
    std::cout << s.benchmark_tag << " " << to_string(mode)
              << " accuracy=" << s.accuracy << " n=" << s.n_questions << "\n";
  if (!opt.out.empty()) {
    write_llm_scores_csv(scores, to_string(mode), opt.out);
    std::cout << "wrote " << opt.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LR-policy tuning, desk-scale training, and ensemble selection"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output file or directory");
    sub->add_option("--seed", opt.seed, "Random seed")
        ->each([&](const std::string&) { opt.seed_given = true; });
  };

  CLI::App* tune = app.add_subcommand("tune", "Run a policy search");
  tune->add_option("--config", opt.config, "Tune config JSON")->required();
  tune->add_option("--jobs", opt.jobs, "Concurrent trials");
  add_common(tune);

  CLI::App* train = app.add_subcommand("train", "Train one (policy, seed)");
  train->add_option("--task", opt.task_file, "Task config JSON")->required();
  train->add_option("--policy", opt.policy_file, "Policy JSON (file or inline)")
      ->required();
  add_common(train);

  CLI::App* predict =
      app.add_subcommand("predict", "Checkpoint -> prediction CSV");
  predict->add_option("--checkpoint", opt.checkpoint, "Checkpoint path")
      ->required();
  predict->add_option("--task", opt.task_file, "Task config JSON")->required();
  predict->add_option("--split", opt.split, "train|val|test");
  predict->add_option("--model-id", opt.model_id, "Model id for the header");
  add_common(predict);

  CLI::App* select = app.add_subcommand("select", "Run one selection method");
  select->add_option("--run", opt.run, "Run directory")->required();
  select->add_option("--method", opt.method, "brute|greedy|random|focal");
  select->add_option("--size", opt.size, "Team size");
  select->add_option("--trials", opt.trials, "Random-method trials");
  add_common(select);

  CLI::App* sweep = app.add_subcommand("sweep", "Selection report over sizes");
  sweep->add_option("--run", opt.run, "Run directory")->required();
  sweep->add_option("--methods", opt.methods, "Comma list of methods");
  sweep->add_option("--sizes", opt.sizes, "Comma list of team sizes");
  sweep->add_option("--trials", opt.trials, "Random-method trials");
  add_common(sweep);

  CLI::App* vote = app.add_subcommand("vote", "Combine prediction CSVs");
  vote->add_option("files", opt.files, "Prediction CSV paths")->required();
  vote->add_option("--mode", opt.mode, "soft|majority");
  vote->add_option("--labels", opt.labels_file, "Labels CSV for accuracy");
  add_common(vote);

  CLI::App* schedule = app.add_subcommand("schedule", "Render a policy");
  schedule
      ->add_option("--policy", opt.policy_file, "Policy JSON (file or inline)")
      ->required();
  schedule->add_option("--steps", opt.steps, "Budget T")->required();
  add_common(schedule);

  CLI::App* simvar =
      app.add_subcommand("simvar", "Variance theory vs Monte Carlo");
  simvar->add_option("--config", opt.config, "Sim config JSON")->required();
  simvar->add_option("--trials", opt.trials, "Override trial count")
      ->each([&](const std::string&) { opt.trials_given = true; });
  add_common(simvar);

  CLI::App* diversity =
      app.add_subcommand("diversity", "Parameter cosine / focal diversity");
  diversity->add_option("files", opt.files, "Checkpoint paths");
  diversity->add_option("--run", opt.run, "Run directory (with --team)");
  diversity->add_option("--team", opt.team, "Comma list of model ids");
  diversity->add_flag("--include-output-layer", opt.include_output_layer,
                      "Include the output layer in the cosine");
  add_common(diversity);

  CLI::App* llm = app.add_subcommand("llm-vote", "Vote over LLM logs");
  llm->add_option("files", opt.files, "JSONL log paths")->required();
  llm->add_option("--gold", opt.gold, "Gold key CSV")->required();
  llm->add_option("--mode", opt.mode, "soft|majority");
  llm->add_option("--combine", opt.combine, "score|softmax");
  add_common(llm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand(tune)) return cmd_tune(opt);
    if (app.got_subcommand(train)) return cmd_train(opt);
    if (app.got_subcommand(predict)) return cmd_predict(opt);
    if (app.got_subcommand(select)) return cmd_select(opt);
    if (app.got_subcommand(sweep)) return cmd_sweep(opt);
    if (app.got_subcommand(vote)) return cmd_vote(opt);
    if (app.got_subcommand(schedule)) return cmd_schedule(opt);
    if (app.got_subcommand(simvar)) return cmd_simvar(opt);
    if (app.got_subcommand(diversity)) return cmd_diversity(opt);
    if (app.got_subcommand(llm)) return cmd_llm_vote(opt);
  } catch (const FileParseError& e) {
    std::cerr << "error: parse: " << e.what() << "\n";
    return 1;
  } catch (const DivergedError& e) {
    std::cerr << "error: diverged: " << e.what() << "\n";
    return 1;
  } catch (const EnumerationLimitError& e) {
    std::cerr << "error: limit: " << e.what() << "\n";
    return 1;
  } catch (const EmptyResultError& e) {
    std::cerr << "error: empty-result: " << e.what() << "\n";
    return 1;
  } catch (const ParameterError& e) {
    std::cerr << "error: parameter: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
