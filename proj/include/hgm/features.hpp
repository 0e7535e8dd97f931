#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hgm/matrix.hpp"
#include "hgm/rng.hpp"

namespace hgm::feat {

// Four-level classification code. A bare section+class context like "A47"
// leaves subclass at the sentinel and main_group at 0. subgroup keeps the
// raw digits after '/' so nonzero suffixes render back byte-exactly; a /00
// suffix normalizes away.
struct CpcCode {
    static constexpr char kNoSubclass = '\0';

    char section = 'A';
    int cls = 0;
    char subclass = kNoSubclass;
    int main_group = 0;
    std::optional<std::string> subgroup;
    std::string raw;

    friend bool operator==(const CpcCode& a, const CpcCode& b) {
        return a.section == b.section && a.cls == b.cls && a.subclass == b.subclass &&
               a.main_group == b.main_group && a.subgroup == b.subgroup;
    }
};

// Accepts ^[A-HY]\d{2}[A-Z](\d+(/\d+)?)?$ after trimming; throws ParseError
// with the offending character position otherwise.
CpcCode cpc_parse(const std::string& code);

std::string cpc_render(const CpcCode& code);

// Token -> embedding row lookup with a dedicated out-of-vocabulary row
// stored last. Row order follows vocabulary insertion order.
class EmbeddingTable {
public:
    EmbeddingTable(const std::vector<std::string>& vocabulary, std::size_t width,
                   hgm::num::Rng& rng);

    std::size_t width() const { return weights_.cols(); }
    std::size_t vocab_size() const { return weights_.rows() - 1; }
    std::size_t row_of(const std::string& token) const;
    std::size_t oov_row() const { return weights_.rows() - 1; }

    const hgm::num::Matrix& weights() const { return weights_; }
    hgm::num::Matrix& weights() { return weights_; }

    const std::map<std::string, std::size_t>& vocabulary() const { return vocab_; }

private:
    std::map<std::string, std::size_t> vocab_;
    hgm::num::Matrix weights_;
};

// Concatenation of the four level embeddings in
// section, class, subclass, main-group order. All tables must share a width.
hgm::num::Matrix cpc_embed(const CpcCode& code, const EmbeddingTable& sections,
                           const EmbeddingTable& classes, const EmbeddingTable& subclasses,
                           const EmbeddingTable& groups);

// Mean-pooled lookup embedding of a token sequence.
hgm::num::Matrix embed_text_node(const std::vector<std::string>& tokens,
                                 const EmbeddingTable& table);

class TfIdfModel {
public:
    // Documents are (id, tokens); ids must be unique.
    static TfIdfModel fit(const std::vector<std::pair<std::string, std::vector<std::string>>>&
                              corpus);

    std::size_t doc_count() const { return doc_count_; }
    double idf(const std::string& term) const;

    // Raw-count tf times smoothed idf; zero for terms absent from the doc.
    const std::map<std::string, double>& doc_weights(const std::string& doc_id) const;

    // Per-document min-max normalization of doc_weights into [0,1]; a doc
    // whose weights are all equal maps every present token to 1.
    const std::map<std::string, double>& doc_weights_normalized(const std::string& doc_id) const;

    double cosine(const std::string& doc_a, const std::string& doc_b) const;

    bool has_doc(const std::string& doc_id) const { return weights_.count(doc_id) > 0; }

private:
    std::size_t doc_count_ = 0;
    std::map<std::string, std::size_t> df_;
    std::map<std::string, std::map<std::string, double>> weights_;
    std::map<std::string, std::map<std::string, double>> normalized_;
};

// Weighted sum of cited embeddings, each scaled by the tf-idf cosine between
// the citing and cited documents. An empty cited set yields the zero vector
// of the requested width and raises the degenerate flag.
hgm::num::Matrix cite_init(const std::string& target_id,
                           const std::vector<std::pair<std::string, hgm::num::Matrix>>& cited,
                           const TfIdfModel& model, std::size_t width,
                           bool* degenerate = nullptr);

// Sidecar format: `citing_id<TAB>cited_id` per line.
std::vector<std::pair<std::string, std::string>> load_citations(std::istream& in);
std::vector<std::pair<std::string, std::string>> load_citations_file(const std::string& path);

}  // namespace hgm::feat
