#include "grg/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "grg/detail/text.hpp"
#include "grg/error.hpp"

namespace grg {

namespace {

// Minimal UTF-8 walker. Invalid sequences are passed through byte-for-byte.
struct Utf8Cursor {
    const std::string& s;
    std::size_t pos = 0;

    bool done() const { return pos >= s.size(); }

    // Decodes the next codepoint; on malformed input returns the single byte.
    std::uint32_t next(std::size_t& len) {
        const auto b0 = static_cast<unsigned char>(s[pos]);
        len = 1;
        std::uint32_t cp = b0;
        int extra = 0;
        if (b0 >= 0xF0) { cp = b0 & 0x07u; extra = 3; }
        else if (b0 >= 0xE0) { cp = b0 & 0x0Fu; extra = 2; }
        else if (b0 >= 0xC0) { cp = b0 & 0x1Fu; extra = 1; }
        else if (b0 >= 0x80) { pos += 1; return b0; }
        if (extra > 0 && pos + static_cast<std::size_t>(extra) >= s.size()) {
            pos += 1;
            return b0;
        }
        for (int i = 1; i <= extra; ++i) {
            const auto bi = static_cast<unsigned char>(s[pos + static_cast<std::size_t>(i)]);
            if ((bi & 0xC0u) != 0x80u) { pos += 1; return b0; }
            cp = (cp << 6) | (bi & 0x3Fu);
        }
        len = static_cast<std::size_t>(extra) + 1;
        pos += len;
        return cp;
    }
};

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::uint32_t lower(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20; // Latin-1 letters
    return cp;
}

bool in(std::uint32_t cp, std::uint32_t lo, std::uint32_t hi) { return cp >= lo && cp <= hi; }

// Unicode general categories P*, covering ASCII exactly plus the punctuation
// blocks that actually show up in QA text. $ + < = > ^ ` | ~ are symbols,
// not punctuation, and stay.
bool is_punct(std::uint32_t cp) {
    if (cp < 0x80) {
        switch (cp) {
        case '!': case '"': case '#': case '%': case '&': case '\'': case '(': case ')':
        case '*': case ',': case '-': case '.': case '/': case ':': case ';': case '?':
        case '@': case '[': case '\\': case ']': case '_': case '{': case '}':
            return true;
        default:
            return false;
        }
    }
    switch (cp) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
    case 0x3030:
        return true;
    default:
        break;
    }
    return in(cp, 0x2010, 0x2027) || in(cp, 0x2030, 0x2043) || in(cp, 0x2045, 0x2051) ||
           in(cp, 0x2053, 0x205E) || in(cp, 0x3001, 0x3003) || in(cp, 0x3008, 0x3011) ||
           in(cp, 0x3014, 0x301F) || in(cp, 0xFF01, 0xFF03) || in(cp, 0xFF05, 0xFF0A) ||
           in(cp, 0xFF0C, 0xFF0F) || cp == 0xFF1A || cp == 0xFF1B || cp == 0xFF1F ||
           cp == 0xFF20 || in(cp, 0xFF3B, 0xFF3D) || cp == 0xFF3F || cp == 0xFF5B ||
           cp == 0xFF5D || in(cp, 0xFF5F, 0xFF65);
}

bool is_space_cp(std::uint32_t cp) {
    if (cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v')
        return true;
    return cp == 0xA0 || in(cp, 0x2000, 0x200A) || cp == 0x2028 || cp == 0x2029 ||
           cp == 0x202F || cp == 0x205F || cp == 0x3000;
}

bool is_article(const std::string& token) {
    return token == "a" || token == "an" || token == "the";
}

std::vector<std::string> tokens_of(const std::string& normalized) {
    return detail::split_whitespace(normalized);
}

} // namespace

std::string normalize_answer(const std::string& s) {
    std::string folded;
    folded.reserve(s.size());
    Utf8Cursor cur{s};
    while (!cur.done()) {
        std::size_t len = 0;
        const std::uint32_t cp = cur.next(len);
        if (is_punct(cp)) continue;
        if (is_space_cp(cp)) {
            folded.push_back(' ');
            continue;
        }
        append_utf8(folded, lower(cp));
    }

    std::string out;
    for (const auto& tok : detail::split_whitespace(folded)) {
        if (is_article(tok)) continue;
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

int exact_match(const std::string& prediction, const std::vector<std::string>& answers) {
    if (answers.empty()) throw Error("exact match requires a non-empty answer list");
    const std::string pred = normalize_answer(prediction);
    for (const auto& a : answers) {
        if (pred == normalize_answer(a)) return 1;
    }
    return 0;
}

namespace {

double f1_against(const std::vector<std::string>& pred_tokens, const std::string& answer) {
    const auto gold_tokens = tokens_of(normalize_answer(answer));
    if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
    if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;

    std::unordered_map<std::string, int> counts;
    for (const auto& t : gold_tokens) ++counts[t];
    int overlap = 0;
    for (const auto& t : pred_tokens) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double p = static_cast<double>(overlap) / static_cast<double>(pred_tokens.size());
    const double r = static_cast<double>(overlap) / static_cast<double>(gold_tokens.size());
    return 2.0 * p * r / (p + r);
}

} // namespace

double f1_score(const std::string& prediction, const std::vector<std::string>& answers) {
    if (answers.empty()) throw Error("F1 requires a non-empty answer list");
    const auto pred_tokens = tokens_of(normalize_answer(prediction));
    double best = 0.0;
    for (const auto& a : answers) best = std::max(best, f1_against(pred_tokens, a));
    return best;
}

int recall_at_k(const std::vector<std::string>& ranked_doc_texts,
                const std::vector<std::string>& answers, int k) {
    if (answers.empty()) throw Error("recall requires a non-empty answer list");
    if (k < 1) throw Error("recall requires k >= 1");
    std::vector<std::string> needles;
    for (const auto& a : answers) {
        std::string n = normalize_answer(a);
        // An answer that normalizes away entirely matches nothing rather
        // than everything.
        if (!n.empty()) needles.push_back(std::move(n));
    }
    const std::size_t upto = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                   ranked_doc_texts.size());
    for (std::size_t i = 0; i < upto; ++i) {
        const std::string hay = normalize_answer(ranked_doc_texts[i]);
        for (const auto& needle : needles) {
            if (hay.find(needle) != std::string::npos) return 1;
        }
    }
    return 0;
}

MetricReport aggregate_metrics(const std::vector<QuestionScore>& per_question) {
    if (per_question.empty()) throw Error("cannot aggregate an empty score list");
    MetricReport report;
    for (const auto& q : per_question) {
        report.em += q.em;
        report.f1 += q.f1;
    }
    report.n = per_question.size();
    report.em /= static_cast<double>(report.n);
    report.f1 /= static_cast<double>(report.n);
    return report;
}

RecallReport aggregate_recall(int k, const std::vector<int>& per_question_hits) {
    if (per_question_hits.empty()) throw Error("cannot aggregate an empty recall list");
    if (k < 1) throw Error("recall requires k >= 1");
    RecallReport report;
    report.k = k;
    report.n = per_question_hits.size();
    double sum = 0.0;
    for (int hit : per_question_hits) sum += hit;
    report.recall = sum / static_cast<double>(report.n);
    return report;
}

} // namespace grg
