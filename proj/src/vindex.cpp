#include "grg/vindex.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "grg/detail/hash.hpp"
#include "grg/error.hpp"

namespace grg {

namespace {

constexpr char kMagic[8] = {'G', 'R', 'G', 'I', 'D', 'X', '1', '\0'};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double l2_norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

void check_finite(const EmbeddingVector& v, const std::string& what) {
    for (double x : v.values) {
        if (!std::isfinite(x)) throw Error(what + ": non-finite vector value");
    }
}

void put_u32(std::string& out, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float x) {
    std::uint32_t bits;
    std::memcpy(&bits, &x, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos;
    std::size_t end;

    std::uint32_t u32() {
        if (pos + 4 > end) throw Error("corrupt index file: truncated field");
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i)
            x |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 4;
        return x;
    }

    std::uint64_t u64() {
        if (pos + 8 > end) throw Error("corrupt index file: truncated field");
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i)
            x |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 8;
        return x;
    }

    std::string bytes(std::size_t n) {
        if (pos + n > end) throw Error("corrupt index file: truncated field");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }

    unsigned char byte() {
        if (pos + 1 > end) throw Error("corrupt index file: truncated field");
        return static_cast<unsigned char>(buf[pos++]);
    }

    float f32() {
        const std::uint32_t bits = u32();
        float x;
        std::memcpy(&x, &bits, 4);
        return x;
    }
};

} // namespace

double cosine_similarity(const EmbeddingVector& q, const EmbeddingVector& d) {
    if (q.dim() != d.dim())
        throw Error("cosine similarity dimension mismatch: " + std::to_string(q.dim()) + " vs " +
                    std::to_string(d.dim()));
    if (q.dim() == 0) throw Error("cosine similarity of empty vectors");
    check_finite(q, "cosine similarity");
    check_finite(d, "cosine similarity");
    const double qn = l2_norm(q.values);
    const double dn = l2_norm(d.values);
    if (qn == 0.0 || dn == 0.0) throw Error("undefined similarity: zero-norm vector");
    return dot(q.values, d.values) / (qn * dn);
}

VectorIndex::VectorIndex(int dim) : dim_(dim) {
    if (dim < 1) throw Error("vector index dimension must be >= 1");
}

void VectorIndex::add(const std::vector<EmbeddedDocument>& docs) {
    std::unordered_set<std::string> incoming;
    for (const auto& doc : docs) {
        if (doc.doc_id.empty()) throw Error("document id must be non-empty");
        if (static_cast<int>(doc.vector.dim()) != dim_)
            throw Error("document '" + doc.doc_id + "' has dim " +
                        std::to_string(doc.vector.dim()) + ", index expects " +
                        std::to_string(dim_));
        check_finite(doc.vector, "document '" + doc.doc_id + "'");
        if (by_id_.count(doc.doc_id) || !incoming.insert(doc.doc_id).second)
            throw Error("duplicate document id '" + doc.doc_id + "'");
    }
    entries_.reserve(entries_.size() + docs.size());
    for (const auto& doc : docs) {
        EmbeddedDocument stored = doc;
        // Quantize to f32 at insertion so in-memory scores match a
        // save/load round trip exactly.
        for (double& v : stored.vector.values) v = static_cast<double>(static_cast<float>(v));
        norms_.push_back(l2_norm(stored.vector.values));
        by_id_.emplace(stored.doc_id, entries_.size());
        entries_.push_back(std::move(stored));
    }
}

std::vector<ScoredDocument> VectorIndex::retrieve_top_k(const EmbeddingVector& q, int k,
                                                        double threshold) const {
    if (k < 1) throw Error("retrieve_top_k requires k >= 1");
    if (entries_.empty()) return {};
    if (static_cast<int>(q.dim()) != dim_)
        throw Error("query has dim " + std::to_string(q.dim()) + ", index expects " +
                    std::to_string(dim_));
    check_finite(q, "query");
    const double qn = l2_norm(q.values);
    if (qn == 0.0) throw Error("undefined similarity: zero-norm query");

    std::vector<ScoredDocument> scored;
    scored.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (norms_[i] == 0.0) throw Error("undefined similarity: zero-norm vector in index");
        const double score = dot(q.values, entries_[i].vector.values) / (qn * norms_[i]);
        if (score >= threshold) scored.push_back({entries_[i].doc_id, score});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
    return scored;
}

const EmbeddedDocument* VectorIndex::find(const std::string& doc_id) const {
    auto it = by_id_.find(doc_id);
    return it == by_id_.end() ? nullptr : &entries_[it->second];
}

void VectorIndex::save(const std::filesystem::path& path) const {
    std::string payload;
    put_u32(payload, static_cast<std::uint32_t>(dim_));
    put_u64(payload, entries_.size());
    for (const auto& e : entries_) {
        put_u32(payload, static_cast<std::uint32_t>(e.doc_id.size()));
        payload += e.doc_id;
        put_u32(payload, static_cast<std::uint32_t>(e.text.size()));
        payload += e.text;
        payload.push_back(static_cast<char>(e.source));
        for (double v : e.vector.values) put_f32(payload, static_cast<float>(v));
    }

    std::string file(kMagic, sizeof(kMagic));
    file += payload;
    std::string crc;
    put_u32(crc, detail::crc32(payload.data(), payload.size()));
    file += crc;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write index file: " + path.string());
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out) throw Error("index write failed: " + path.string());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open index file: " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kMagic) + 4 + 8 + 4)
        throw Error("corrupt index file: too short: " + path.string());
    if (std::memcmp(buf.data(), kMagic, 6) != 0)
        throw Error("corrupt index file: bad magic: " + path.string());
    if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        const std::string found(buf.data() + 6, 1);
        throw Error("index version mismatch: file has '" + found + "', this build reads '1'");
    }

    const std::size_t payload_end = buf.size() - 4;
    Reader crc_reader{buf, payload_end, buf.size()};
    const std::uint32_t stored_crc = crc_reader.u32();
    const std::uint32_t actual_crc =
        detail::crc32(buf.data() + sizeof(kMagic), payload_end - sizeof(kMagic));
    if (stored_crc != actual_crc) throw Error("corrupt index file: checksum mismatch");

    Reader r{buf, sizeof(kMagic), payload_end};
    const std::uint32_t dim = r.u32();
    if (dim < 1) throw Error("corrupt index file: dimension 0");
    const std::uint64_t count = r.u64();

    VectorIndex index(static_cast<int>(dim));
    std::vector<EmbeddedDocument> docs;
    docs.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        EmbeddedDocument doc;
        doc.doc_id = r.bytes(r.u32());
        doc.text = r.bytes(r.u32());
        const unsigned char src = r.byte();
        if (src > 1) throw Error("corrupt index file: bad source byte");
        doc.source = static_cast<DocSource>(src);
        doc.vector.values.resize(dim);
        for (std::uint32_t d = 0; d < dim; ++d)
            doc.vector.values[d] = static_cast<double>(r.f32());
        docs.push_back(std::move(doc));
    }
    if (r.pos != payload_end) throw Error("corrupt index file: trailing bytes in payload");
    index.add(docs);
    return index;
}

} // namespace grg
