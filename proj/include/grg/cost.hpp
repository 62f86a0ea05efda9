#pragma once

#include <cstdint>
#include <string>

namespace grg {

// FLOPs totals are exact unsigned 64-bit integers; intermediate products are
// accumulated in 128 bits and anything beyond 2^64-1 is an overflow error.
using Flops = std::uint64_t;

struct CostProfile {
    Flops params = 1;            // model parameter count
    Flops tokens_per_doc = 0;
    Flops n_docs = 0;
    Flops embed_dim = 1;
    Flops corpus_size = 0;
    Flops query_tokens = 0;

    void validate() const;
};

// params * n_docs * tokens_per_doc
Flops flops_generate(Flops params, Flops n_docs, Flops tokens_per_doc);

// params * corpus_size * tokens_per_doc
Flops flops_encode_corpus(Flops params, Flops corpus_size, Flops tokens_per_doc);

// params * query_tokens + corpus_size * (2 * embed_dim - 1)
Flops flops_retrieve(Flops params, Flops query_tokens, Flops corpus_size, Flops embed_dim);

enum class CostStage { retrieval, generation };

CostStage parse_stage(const std::string& s);
std::string asymptotic_class(CostStage stage);

// Per-stage FLOPs table for one profile, with asymptotic classes. Where a
// profile matches a configuration whose published total disagrees with the
// formula, the table footnotes the published value.
std::string render_cost_table(const CostProfile& profile);

} // namespace grg
