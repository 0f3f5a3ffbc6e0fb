#include "lrpool/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "lrpool/errors.hpp"
#include "text_util.hpp"

namespace lrpool {

namespace {

void require_same_shape(const std::vector<PredictionMatrix>& members) {
  if (members.empty()) throw ParameterError("empty member list");
  const PredictionMatrix& first = members.front();
  for (const PredictionMatrix& m : members) {
    if (m.n_samples != first.n_samples || m.n_classes != first.n_classes ||
        m.split_tag != first.split_tag)
      throw ParameterError(
          "member matrices disagree on shape or split (" + m.model_id +
          " vs " + first.model_id + ")");
  }
}

// Header format: #model_id=...,n=...,c=...,split=...
std::map<std::string, std::string> parse_header(const std::string& path,
                                                std::string_view line) {
  if (line.empty() || line.front() != '#')
    throw FileParseError(path, 1, "missing '#' header line");
  std::map<std::string, std::string> fields;
  for (std::string_view part : detail::split(line.substr(1), ',')) {
    const std::size_t eq = part.find('=');
    if (eq == std::string_view::npos)
      throw FileParseError(path, 1,
                           "header entry '" + std::string(part) +
                               "' is not key=value");
    fields[std::string(part.substr(0, eq))] = std::string(part.substr(eq + 1));
  }
  for (const char* key : {"model_id", "n", "c", "split"})
    if (!fields.count(key))
      throw FileParseError(path, 1,
                           std::string("header missing field '") + key + "'");
  return fields;
}

}  // namespace

void PredictionMatrix::validate() const {
  if (n_samples < 1 || n_classes < 2)
    throw ParameterError("prediction matrix needs n>=1 and c>=2");
  if (probs.size() != static_cast<std::size_t>(n_samples) * n_classes)
    throw ParameterError("probability buffer size does not match n*c");
  for (int i = 0; i < n_samples; ++i) {
    double sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      const double p = at(i, c);
      if (!(p >= 0.0 && p <= 1.0))
        throw ParameterError("probability outside [0,1] at row " +
                             std::to_string(i));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw ParameterError("row " + std::to_string(i) +
                           " sums to " + detail::format_double_short(sum) +
                           ", not 1 within 1e-6");
  }
}

void LabeledEvalSet::validate() const {
  if (n_classes < 2) throw ParameterError("eval set needs n_classes >= 2");
  for (int y : labels)
    if (y < 0 || y >= n_classes)
      throw ParameterError("label " + std::to_string(y) +
                           " outside [0, n_classes)");
}

int argmax_lowest(const double* row, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

PredictionMatrix soft_vote(const std::vector<PredictionMatrix>& members) {
  require_same_shape(members);
  PredictionMatrix out = members.front();
  out.model_id = "ensemble";
  if (members.size() == 1) return out;
  // Each cell is averaged over the sorted member values, offset from the
  // smallest, so the result is bit-identical under member reordering and
  // identical members average to exactly themselves.
  const std::size_t n_members = members.size();
  std::vector<double> cell(n_members);
  for (std::size_t i = 0; i < out.probs.size(); ++i) {
    for (std::size_t m = 0; m < n_members; ++m) cell[m] = members[m].probs[i];
    std::sort(cell.begin(), cell.end());
    double above_min = 0.0;
    for (std::size_t m = 1; m < n_members; ++m) above_min += cell[m] - cell[0];
    out.probs[i] = cell[0] + above_min / static_cast<double>(n_members);
  }
  return out;
}

std::vector<int> majority_vote(const std::vector<PredictionMatrix>& members) {
  require_same_shape(members);
  const int n = members.front().n_samples;
  const int C = members.front().n_classes;
  std::vector<int> result(n);
  std::vector<int> votes(C);
  std::vector<double> mass(C);
  for (int i = 0; i < n; ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(mass.begin(), mass.end(), 0.0);
    for (const PredictionMatrix& m : members) {
      ++votes[argmax_lowest(m.probs.data() +
                                static_cast<std::size_t>(i) * C,
                            C)];
      for (int c = 0; c < C; ++c) mass[c] += m.at(i, c);
    }
    const int top = *std::max_element(votes.begin(), votes.end());
    int winner = -1;
    for (int c = 0; c < C; ++c) {
      if (votes[c] != top) continue;
      if (winner < 0 || mass[c] > mass[winner]) winner = c;
    }
    result[i] = winner;
  }
  return result;
}

double accuracy(const PredictionMatrix& preds, const LabeledEvalSet& eval) {
  preds.validate();
  eval.validate();
  if (static_cast<int>(eval.labels.size()) != preds.n_samples ||
      eval.n_classes != preds.n_classes)
    throw ParameterError("prediction matrix and eval set shapes differ");
  int correct = 0;
  for (int i = 0; i < preds.n_samples; ++i)
    if (argmax_lowest(preds.probs.data() +
                          static_cast<std::size_t>(i) * preds.n_classes,
                      preds.n_classes) == eval.labels[i])
      ++correct;
  return static_cast<double>(correct) / preds.n_samples;
}

double labels_accuracy(const std::vector<int>& predicted,
                       const LabeledEvalSet& eval) {
  eval.validate();
  if (predicted.size() != eval.labels.size())
    throw ParameterError("predicted label count and eval set size differ");
  if (predicted.empty()) throw ParameterError("empty prediction list");
  int correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == eval.labels[i]) ++correct;
  return static_cast<double>(correct) / predicted.size();
}

void write_prediction_csv(const PredictionMatrix& m, const std::string& path) {
  m.validate();
  std::ofstream out(path);
  if (!out) throw FileParseError(path, 0, "cannot open file for writing");
  out << "#model_id=" << m.model_id << ",n=" << m.n_samples
      << ",c=" << m.n_classes << ",split=" << m.split_tag << "\n";
  for (int i = 0; i < m.n_samples; ++i) {
    for (int c = 0; c < m.n_classes; ++c) {
      if (c) out << ",";
      out << detail::format_double(m.at(i, c));
    }
    out << "\n";
  }
  if (!out) throw FileParseError(path, 0, "write failed");
}

PredictionMatrix read_prediction_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileParseError(path, 0, "cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw FileParseError(path, 1, "empty file");
  const auto header = parse_header(path, detail::strip_cr(line));

  PredictionMatrix m;
  m.model_id = header.at("model_id");
  m.split_tag = header.at("split");
  long n, c;
  if (!detail::parse_long(header.at("n"), n) || n < 1)
    throw FileParseError(path, 1, "bad n in header");
  if (!detail::parse_long(header.at("c"), c) || c < 2)
    throw FileParseError(path, 1, "bad c in header");
  m.n_samples = static_cast<int>(n);
  m.n_classes = static_cast<int>(c);
  m.probs.reserve(static_cast<std::size_t>(n) * c);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = detail::split(detail::strip_cr(line), ',');
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (static_cast<long>(cells.size()) != c)
      throw FileParseError(path, line_no,
                           "expected " + std::to_string(c) + " cells, got " +
                               std::to_string(cells.size()));
    for (const auto& cell : cells) {
      double v;
      if (!detail::parse_double(cell, v))
        throw FileParseError(path, line_no,
                             "non-numeric cell '" + std::string(cell) + "'");
      m.probs.push_back(v);
    }
  }
  if (static_cast<long>(m.probs.size()) != n * c)
    throw FileParseError(path, line_no,
                         "expected " + std::to_string(n) + " rows");
  try {
    m.validate();
  } catch (const ParameterError& e) {
    throw FileParseError(path, 0, e.what());
  }
  return m;
}

void write_labels_csv(const std::vector<int>& labels,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileParseError(path, 0, "cannot open file for writing");
  out << "label\n";
  for (int y : labels) out << y << "\n";
  if (!out) throw FileParseError(path, 0, "write failed");
}

std::vector<int> read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileParseError(path, 0, "cannot open file");
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "label")
    throw FileParseError(path, 1, "expected header 'label'");
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cell = detail::strip_cr(line);
    if (cell.empty()) continue;
    long y;
    if (!detail::parse_long(cell, y) || y < 0)
      throw FileParseError(path, line_no,
                           "label cell '" + std::string(cell) +
                               "' is not a non-negative integer");
    labels.push_back(static_cast<int>(y));
  }
  return labels;
}

}  // namespace lrpool
