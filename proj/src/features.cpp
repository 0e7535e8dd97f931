#include "hgm/features.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hgm/errors.hpp"

namespace hgm::feat {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

CpcCode cpc_parse(const std::string& code) {
    const std::string s = trim(code);
    auto fail = [&](const char* why, std::size_t pos) -> CpcCode {
        throw ParseError(std::string("bad CPC code '") + s + "': " + why, pos);
    };
    if (s.empty()) fail("empty code", 0);
    CpcCode out;
    out.raw = s;
    if (!((s[0] >= 'A' && s[0] <= 'H') || s[0] == 'Y')) fail("section must be A-H or Y", 0);
    out.section = s[0];
    if (s.size() < 2 || !is_digit(s[1])) fail("class needs two digits", 1);
    if (s.size() < 3 || !is_digit(s[2])) fail("class needs two digits", 2);
    out.cls = (s[1] - '0') * 10 + (s[2] - '0');
    if (s.size() == 3) return out;
    if (!is_upper(s[3])) fail("subclass must be a capital letter", 3);
    out.subclass = s[3];
    if (s.size() == 4) return out;
    std::size_t i = 4;
    if (!is_digit(s[i])) fail("main group must be numeric", i);
    long group = 0;
    while (i < s.size() && is_digit(s[i])) {
        group = group * 10 + (s[i] - '0');
        ++i;
    }
    out.main_group = static_cast<int>(group);
    if (i == s.size()) return out;
    if (s[i] != '/') fail("unexpected character after main group", i);
    ++i;
    if (i == s.size() || !is_digit(s[i])) fail("subgroup needs digits after '/'", i);
    const std::size_t sub_start = i;
    long sub = 0;
    while (i < s.size() && is_digit(s[i])) {
        sub = sub * 10 + (s[i] - '0');
        ++i;
    }
    if (i != s.size()) fail("trailing characters after subgroup", i);
    if (sub != 0) out.subgroup = s.substr(sub_start);
    return out;
}

std::string cpc_render(const CpcCode& code) {
    std::ostringstream out;
    out << code.section;
    out << static_cast<char>('0' + code.cls / 10) << static_cast<char>('0' + code.cls % 10);
    if (code.subclass == CpcCode::kNoSubclass) return out.str();
    out << code.subclass;
    if (code.main_group == 0 && !code.subgroup) return out.str();
    out << code.main_group;
    if (code.subgroup) out << '/' << *code.subgroup;
    return out.str();
}

EmbeddingTable::EmbeddingTable(const std::vector<std::string>& vocabulary, std::size_t width,
                               hgm::num::Rng& rng)
    : weights_(0, 0) {
    for (const std::string& token : vocabulary)
        if (!vocab_.count(token)) vocab_.emplace(token, vocab_.size());
    weights_ = hgm::num::Matrix::uniform(vocab_.size() + 1, width, rng, -0.1, 0.1);
}

std::size_t EmbeddingTable::row_of(const std::string& token) const {
    const auto it = vocab_.find(token);
    return it == vocab_.end() ? oov_row() : it->second;
}

hgm::num::Matrix cpc_embed(const CpcCode& code, const EmbeddingTable& sections,
                           const EmbeddingTable& classes, const EmbeddingTable& subclasses,
                           const EmbeddingTable& groups) {
    const std::size_t w = sections.width();
    if (classes.width() != w || subclasses.width() != w || groups.width() != w)
        throw DimensionError("cpc_embed: the four level tables must share one width");
    hgm::num::Matrix out(1, 4 * w);
    auto copy_block = [&](const EmbeddingTable& table, const std::string& key,
                          std::size_t block) {
        const std::size_t row = table.row_of(key);
        for (std::size_t c = 0; c < w; ++c) out(0, block * w + c) = table.weights()(row, c);
    };
    copy_block(sections, std::string(1, code.section), 0);
    std::ostringstream cls;
    cls << static_cast<char>('0' + code.cls / 10) << static_cast<char>('0' + code.cls % 10);
    copy_block(classes, cls.str(), 1);
    copy_block(subclasses,
               code.subclass == CpcCode::kNoSubclass ? std::string() :
                                                       std::string(1, code.subclass),
               2);
    copy_block(groups, std::to_string(code.main_group), 3);
    return out;
}

hgm::num::Matrix embed_text_node(const std::vector<std::string>& tokens,
                                 const EmbeddingTable& table) {
    if (tokens.empty()) throw ValidationError("embed_text_node: empty sentence");
    hgm::num::Matrix out(1, table.width());
    for (const std::string& token : tokens) {
        const std::size_t row = table.row_of(token);
        for (std::size_t c = 0; c < table.width(); ++c) out(0, c) += table.weights()(row, c);
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (double& v : out.data()) v *= inv;
    return out;
}

TfIdfModel TfIdfModel::fit(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& corpus) {
    if (corpus.empty()) throw ValidationError("tfidf_fit: need at least one document");
    TfIdfModel model;
    model.doc_count_ = corpus.size();
    for (const auto& [id, tokens] : corpus) {
        if (model.weights_.count(id))
            throw ValidationError("tfidf_fit: duplicate document id: " + id);
        model.weights_[id] = {};
        std::map<std::string, std::size_t> counts;
        for (const std::string& t : tokens) ++counts[t];
        for (const auto& [term, count] : counts) {
            ++model.df_[term];
            model.weights_[id][term] = static_cast<double>(count);
        }
    }
    const double n = static_cast<double>(model.doc_count_);
    for (auto& [id, weights] : model.weights_) {
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (auto& [term, w] : weights) {
            w *= std::log((1.0 + n) / (1.0 + static_cast<double>(model.df_.at(term)))) + 1.0;
            lo = first ? w : std::min(lo, w);
            hi = first ? w : std::max(hi, w);
            first = false;
        }
        auto& norm = model.normalized_[id];
        for (const auto& [term, w] : weights)
            norm[term] = hi > lo ? (w - lo) / (hi - lo) : 1.0;
    }
    return model;
}

double TfIdfModel::idf(const std::string& term) const {
    const auto it = df_.find(term);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(doc_count_)) / (1.0 + df)) + 1.0;
}

const std::map<std::string, double>& TfIdfModel::doc_weights(const std::string& doc_id) const {
    const auto it = weights_.find(doc_id);
    if (it == weights_.end()) throw ValidationError("tfidf: unknown document id: " + doc_id);
    return it->second;
}

const std::map<std::string, double>& TfIdfModel::doc_weights_normalized(
    const std::string& doc_id) const {
    const auto it = normalized_.find(doc_id);
    if (it == normalized_.end()) throw ValidationError("tfidf: unknown document id: " + doc_id);
    return it->second;
}

double TfIdfModel::cosine(const std::string& doc_a, const std::string& doc_b) const {
    const auto& a = doc_weights(doc_a);
    const auto& b = doc_weights(doc_b);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [term, w] : a) {
        na += w * w;
        const auto it = b.find(term);
        if (it != b.end()) dot += w * it->second;
    }
    for (const auto& [term, w] : b) nb += w * w;
    if (na == 0.0 || nb == 0.0) return 0.0;
    double r = dot / (std::sqrt(na) * std::sqrt(nb));
    if (r > 1.0) r = 1.0;
    if (r < 0.0) r = 0.0;
    return r;
}

hgm::num::Matrix cite_init(const std::string& target_id,
                           const std::vector<std::pair<std::string, hgm::num::Matrix>>& cited,
                           const TfIdfModel& model, std::size_t width, bool* degenerate) {
    if (degenerate) *degenerate = cited.empty();
    hgm::num::Matrix out(1, width);
    for (const auto& [cited_id, embedding] : cited) {
        if (embedding.rows() != 1 || embedding.cols() != width)
            throw DimensionError("cite_init: cited embedding width mismatch");
        const double sim = model.cosine(target_id, cited_id);
        for (std::size_t c = 0; c < width; ++c) out(0, c) += sim * embedding(0, c);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> load_citations(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw ParseError("citation line needs citing_id<TAB>cited_id", lineno);
        if (line.find('\t', tab + 1) != std::string::npos)
            throw ParseError("citation line has extra fields", lineno);
        edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return edges;
}

std::vector<std::pair<std::string, std::string>> load_citations_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open citation file: " + path);
    return load_citations(in);
}

}  // namespace hgm::feat
