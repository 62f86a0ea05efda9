#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace grg {

struct MetricReport {
    double em = 0.0;
    double f1 = 0.0;
    std::size_t n = 0;
};

struct RecallReport {
    int k = 0;
    double recall = 0.0;
    std::size_t n = 0;
};

// Lowercase, strip punctuation, drop the articles "a"/"an"/"the" as whole
// tokens, collapse whitespace, trim. Operates on UTF-8 and expects NFC input.
std::string normalize_answer(const std::string& s);

// 1 iff the normalized prediction equals some normalized acceptable answer.
int exact_match(const std::string& prediction, const std::vector<std::string>& answers);

// Token-level F1 between normalized strings, maximized over the answer list.
// Both sides empty after normalization counts as 1.
double f1_score(const std::string& prediction, const std::vector<std::string>& answers);

// 1 iff any of the first min(k, |docs|) documents contains some normalized
// answer as a substring of its normalized text.
int recall_at_k(const std::vector<std::string>& ranked_doc_texts,
                const std::vector<std::string>& answers, int k);

struct QuestionScore {
    double em = 0.0;
    double f1 = 0.0;
};

MetricReport aggregate_metrics(const std::vector<QuestionScore>& per_question);
RecallReport aggregate_recall(int k, const std::vector<int>& per_question_hits);

} // namespace grg
