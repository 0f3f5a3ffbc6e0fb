#pragma once

#include <map>
#include <string>
#include <vector>

namespace lrpool {

/// One per-question, per-model, per-option log-likelihood entry from an
/// evaluation log. Byte length is that of the option's UTF-8 text, supplied
/// by the producer (never recomputed here).
struct ChoiceRecord {
  std::string question_id;
  std::string model_id;
  std::string benchmark_tag;
  int option_index = 0;
  long long option_byte_length = 1;
  double loglikelihood = 0.0;
};

struct IngestResult {
  std::vector<ChoiceRecord> records;       // surviving records
  int dropped_questions = 0;               // removed by the 4-option filter
  std::vector<std::string> dropped_ids;    // sorted question ids
};

/// Parses JSON-Lines files of ChoiceRecords. A question is kept only when
/// every model that mentions it has exactly the four option indices 0..3
/// (no gaps, no extras, no duplicates); otherwise the whole question is
/// dropped and counted. Malformed lines raise FileParseError with file and
/// line number.
IngestResult ingest(const std::vector<std::string>& paths);

/// Byte-length normalization: loglikelihood / option_byte_length.
double normalize(const ChoiceRecord& record);

enum class VoteMode { Soft, Majority };
enum class CombineRule { NormalizedScore, Softmax };

std::string to_string(VoteMode m);
VoteMode vote_mode_from_string(const std::string& name);
std::string to_string(CombineRule r);
CombineRule combine_rule_from_string(const std::string& name);

/// Votes one question across the given models. Soft mode averages each
/// option's per-model score and takes the argmax (ties to the lowest
/// index); majority mode votes per-model argmaxes, breaking ties by the
/// higher summed score, then the lowest index. Under CombineRule::Softmax
/// the per-model normalized scores are first softmaxed into a probability
/// vector. Missing models or options raise ParameterError.
int ensemble_answer(const std::vector<ChoiceRecord>& question_records,
                    const std::vector<std::string>& model_ids, VoteMode mode,
                    CombineRule rule = CombineRule::NormalizedScore);

struct GoldKey {
  std::map<std::string, int> answer;  // question_id -> correct option
};

/// CSV `question_id,answer_index` with a header row.
GoldKey load_gold_csv(const std::string& path);

struct AnsweredQuestion {
  std::string question_id;
  std::string benchmark_tag;
  int answer = 0;
};

struct BenchmarkScore {
  std::string benchmark_tag;
  double accuracy = 0.0;
  int n_questions = 0;
};

/// Accuracy per benchmark tag, sorted by tag. Every answered question must
/// appear in the gold key; an empty answer list is an error.
std::vector<BenchmarkScore> score(const std::vector<AnsweredQuestion>& answers,
                                  const GoldKey& gold);

/// Full pipeline over an ingest result: groups records by question, votes
/// across every model present, and scores against the gold key.
std::vector<BenchmarkScore> run_llm_vote(const IngestResult& ingested,
                                         const GoldKey& gold, VoteMode mode,
                                         CombineRule rule,
                                         std::vector<AnsweredQuestion>* answers_out = nullptr);

/// CSV `benchmark_tag,mode,accuracy,n_questions`.
void write_llm_scores_csv(const std::vector<BenchmarkScore>& scores,
                          const std::string& mode_label,
                          const std::string& path);

}  // namespace lrpool
