#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "hgm/errors.hpp"

namespace hgm::text {

enum class TokenKind { word, number, punctuation, marker };

// Coarse classes scored by the TransitionTable. Punctuation never enters a
// phrase, so it has no class here.
enum class TokenClass { word, number, marker, stopword };

struct Token {
    std::string surface;     // normalized (ASCII-lowercased) form
    std::string raw;         // original slice of the source text
    std::string gap_before;  // source text between the previous token and this one
    std::size_t index = 0;
    TokenKind kind = TokenKind::word;
};

struct TokenStream {
    std::vector<Token> tokens;
    std::string trailing;  // source text after the last token
};

// Scanner rules live in docs/tokenizer_rules.md.
TokenStream tokenize(const std::string& text);

// Exact inverse of tokenize with respect to the source text.
std::string reconstruct(const TokenStream& stream);

// Half-open token index interval. label is only populated at paragraph level.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string label;

    friend bool operator==(const Span& a, const Span& b) {
        return a.start == b.start && a.end == b.end && a.label == b.label;
    }
};

enum class Level { word, phrase, sentence, paragraph };

struct GranularityView {
    Level level = Level::word;
    std::vector<Span> spans;
};

// Learned compatibility of adjacent token classes plus the phrase threshold.
// Scores live in [0,1], theta in (0,1); both are enforced on write.
class TransitionTable {
public:
    TransitionTable();

    double score(TokenClass a, TokenClass b) const;
    void set_score(TokenClass a, TokenClass b, double value);

    double theta() const { return theta_; }
    void set_theta(double value);

    TokenClass classify(const Token& token) const;

    const std::set<std::string>& stopwords() const { return stopwords_; }
    void set_stopwords(std::set<std::string> words) { stopwords_ = std::move(words); }

private:
    std::array<std::array<double, 4>, 4> scores_{};
    double theta_ = 0.5;
    std::set<std::string> stopwords_;
};

// Greedy left-to-right extension: a span keeps absorbing the next token while
// the running product of adjacent-class transition scores stays above theta.
// Punctuation is excluded and acts as a hard boundary.
std::vector<Span> segment_phrases(const std::vector<Token>& tokens,
                                  const TransitionTable& table);

// Boundaries after sentence-final punctuation and before claim markers.
std::vector<Span> segment_sentences(const std::vector<Token>& tokens);

struct SectionLabel {
    std::string label;
    std::size_t start = 0;
    std::size_t end = 0;
};

// Sidecar format: one `label<TAB>start_token<TAB>end_token` per line.
std::vector<SectionLabel> load_section_labels(std::istream& in);
std::vector<SectionLabel> load_section_labels_file(const std::string& path);

// Labeled ranges when given, else the blank-line heuristic. Ranges are
// clamped to the token count; overlap is a validation error.
std::vector<Span> segment_paragraphs(const std::vector<Token>& tokens,
                                     const std::vector<SectionLabel>& labels);

struct Decomposition {
    GranularityView g1;  // word
    GranularityView g2;  // phrase
    GranularityView g3;  // sentence
    GranularityView g4;  // paragraph
};

// Builds all four nested views. Phrase spans never cross sentence boundaries
// and sentence spans never cross paragraph boundaries, by construction.
Decomposition decompose(const std::string& text, const TransitionTable& table,
                        const std::vector<SectionLabel>& labels = {});

}  // namespace hgm::text
