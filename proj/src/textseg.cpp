#include "hgm/textseg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace hgm::text {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }
bool is_sentence_punct(char c) { return c == '.' || c == '!' || c == '?'; }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string to_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = lower(c);
    return out;
}

const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words{
        "a",  "an", "and", "are", "as",   "at", "be",   "by",      "for", "in",
        "is", "of", "on",  "or",  "said", "to", "the",  "with",    "wherein"};
    return words;
}

std::size_t class_index(TokenClass c) { return static_cast<std::size_t>(c); }

}  // namespace

TokenStream tokenize(const std::string& text) {
    TokenStream stream;
    std::size_t i = 0;
    std::size_t gap_start = 0;
    const std::size_t n = text.size();

    auto emit = [&](std::size_t start, std::size_t end, TokenKind kind) {
        Token t;
        t.raw = text.substr(start, end - start);
        t.surface = to_lower(t.raw);
        t.gap_before = text.substr(gap_start, start - gap_start);
        t.index = stream.tokens.size();
        t.kind = kind;
        stream.tokens.push_back(std::move(t));
        gap_start = end;
    };

    while (i < n) {
        const char c = text[i];
        if (is_digit(c)) {
            std::size_t j = i;
            while (j < n && is_digit(text[j])) ++j;
            while (j + 1 < n && text[j] == '.' && is_digit(text[j + 1])) {
                ++j;
                while (j < n && is_digit(text[j])) ++j;
            }
            if (j < n && text[j] == '.' && (j + 1 >= n || !is_digit(text[j + 1]))) {
                emit(i, j + 1, TokenKind::marker);
                i = j + 1;
            } else {
                emit(i, j, TokenKind::number);
                i = j;
            }
        } else if (is_alpha(c)) {
            std::size_t j = i;
            while (j < n && is_alnum(text[j])) ++j;
            emit(i, j, TokenKind::word);
            i = j;
        } else if (is_sentence_punct(c)) {
            emit(i, i + 1, TokenKind::punctuation);
            ++i;
        } else {
            ++i;
        }
    }
    stream.trailing = text.substr(gap_start);
    return stream;
}

std::string reconstruct(const TokenStream& stream) {
    std::string out;
    for (const Token& t : stream.tokens) {
        out += t.gap_before;
        out += t.raw;
    }
    out += stream.trailing;
    return out;
}

TransitionTable::TransitionTable() : stopwords_(default_stopwords()) {
    auto set = [&](TokenClass a, TokenClass b, double v) {
        scores_[class_index(a)][class_index(b)] = v;
    };
    using TC = TokenClass;
    for (auto& row : scores_) row.fill(0.5);
    set(TC::word, TC::word, 0.8);
    set(TC::word, TC::stopword, 0.4);
    set(TC::stopword, TC::word, 0.6);
    set(TC::stopword, TC::stopword, 0.3);
    set(TC::stopword, TC::number, 0.4);
    set(TC::number, TC::stopword, 0.4);
    for (std::size_t k = 0; k < 4; ++k) {
        scores_[class_index(TC::marker)][k] = 0.0;
        scores_[k][class_index(TC::marker)] = 0.0;
    }
}

double TransitionTable::score(TokenClass a, TokenClass b) const {
    return scores_[class_index(a)][class_index(b)];
}

void TransitionTable::set_score(TokenClass a, TokenClass b, double value) {
    if (!(value >= 0.0 && value <= 1.0))
        throw ValidationError("TransitionTable: score must lie in [0,1]");
    scores_[class_index(a)][class_index(b)] = value;
}

void TransitionTable::set_theta(double value) {
    if (!(value > 0.0 && value < 1.0))
        throw ValidationError("TransitionTable: theta must lie in (0,1)");
    theta_ = value;
}

TokenClass TransitionTable::classify(const Token& token) const {
    switch (token.kind) {
        case TokenKind::number: return TokenClass::number;
        case TokenKind::marker: return TokenClass::marker;
        case TokenKind::punctuation:
            throw ValidationError("TransitionTable: punctuation has no class");
        case TokenKind::word: break;
    }
    return stopwords_.count(token.surface) ? TokenClass::stopword : TokenClass::word;
}

namespace {

// Greedy phrase segmentation over one contiguous punctuation-free token run.
void segment_run(const std::vector<Token>& tokens, std::size_t start, std::size_t end,
                 const TransitionTable& table, std::vector<Span>& out) {
    std::size_t i = start;
    while (i < end) {
        double product = 1.0;
        std::size_t j = i;
        while (j + 1 < end) {
            product *= table.score(table.classify(tokens[j]), table.classify(tokens[j + 1]));
            if (!(product > table.theta())) break;
            ++j;
        }
        out.push_back(Span{i, j + 1, {}});
        i = j + 1;
    }
}

}  // namespace

std::vector<Span> segment_phrases(const std::vector<Token>& tokens,
                                  const TransitionTable& table) {
    std::vector<Span> out;
    std::size_t run_start = 0;
    for (std::size_t i = 0; i <= tokens.size(); ++i) {
        if (i == tokens.size() || tokens[i].kind == TokenKind::punctuation) {
            if (run_start < i) segment_run(tokens, run_start, i, table, out);
            run_start = i + 1;
        }
    }
    return out;
}

namespace {

std::vector<Span> sentences_in_range(const std::vector<Token>& tokens, std::size_t lo,
                                     std::size_t hi) {
    std::vector<Span> out;
    std::size_t start = lo;
    auto close = [&](std::size_t end) {
        if (start < end) out.push_back(Span{start, end, {}});
    };
    for (std::size_t i = lo; i < hi; ++i) {
        if (tokens[i].kind == TokenKind::punctuation) {
            close(i);
            start = i + 1;
        } else if (tokens[i].kind == TokenKind::marker && i > start) {
            close(i);
            start = i;
        }
    }
    close(hi);
    return out;
}

}  // namespace

std::vector<Span> segment_sentences(const std::vector<Token>& tokens) {
    return sentences_in_range(tokens, 0, tokens.size());
}

std::vector<SectionLabel> load_section_labels(std::istream& in) {
    std::vector<SectionLabel> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        SectionLabel sl;
        std::string start_s, end_s;
        if (!std::getline(ls, sl.label, '\t') || !std::getline(ls, start_s, '\t') ||
            !std::getline(ls, end_s, '\t'))
            throw ParseError("section label line needs label<TAB>start<TAB>end", lineno);
        try {
            sl.start = std::stoul(start_s);
            sl.end = std::stoul(end_s);
        } catch (const std::exception&) {
            throw ParseError("section label bounds must be nonnegative integers", lineno);
        }
        if (sl.end < sl.start)
            throw ParseError("section label end precedes start", lineno);
        labels.push_back(std::move(sl));
    }
    return labels;
}

std::vector<SectionLabel> load_section_labels_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open section label file: " + path);
    return load_section_labels(in);
}

std::vector<Span> segment_paragraphs(const std::vector<Token>& tokens,
                                     const std::vector<SectionLabel>& labels) {
    const std::size_t n = tokens.size();
    std::vector<Span> out;
    if (n == 0) return out;

    if (!labels.empty()) {
        std::vector<SectionLabel> sorted = labels;
        std::sort(sorted.begin(), sorted.end(),
                  [](const SectionLabel& a, const SectionLabel& b) { return a.start < b.start; });
        std::size_t cursor = 0;
        for (const SectionLabel& sl : sorted) {
            const std::size_t s = std::min(sl.start, n);
            const std::size_t e = std::min(sl.end, n);
            if (s < cursor)
                throw ValidationError("section labels overlap: " + sl.label);
            if (cursor < s) out.push_back(Span{cursor, s, {}});
            if (s < e) out.push_back(Span{s, e, sl.label});
            cursor = std::max(cursor, e);
        }
        if (cursor < n) out.push_back(Span{cursor, n, {}});
        return out;
    }

    // Blank-line heuristic: a gap containing two newlines starts a paragraph.
    auto has_blank_line = [](const std::string& gap) {
        int newlines = 0;
        for (char c : gap)
            if (c == '\n') ++newlines;
        return newlines >= 2;
    };
    std::size_t start = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (has_blank_line(tokens[i].gap_before)) {
            out.push_back(Span{start, i, {}});
            start = i;
        }
    }
    out.push_back(Span{start, n, {}});
    return out;
}

Decomposition decompose(const std::string& text, const TransitionTable& table,
                        const std::vector<SectionLabel>& labels) {
    Decomposition d;
    d.g1.level = Level::word;
    d.g2.level = Level::phrase;
    d.g3.level = Level::sentence;
    d.g4.level = Level::paragraph;

    const TokenStream stream = tokenize(text);
    const std::vector<Token>& tokens = stream.tokens;
    if (tokens.empty()) return d;

    d.g4.spans = segment_paragraphs(tokens, labels);
    for (const Span& para : d.g4.spans) {
        const auto sentences = sentences_in_range(tokens, para.start, para.end);
        d.g3.spans.insert(d.g3.spans.end(), sentences.begin(), sentences.end());
        for (const Span& sent : sentences) {
            std::vector<Token> slice(tokens.begin() + static_cast<std::ptrdiff_t>(sent.start),
                                     tokens.begin() + static_cast<std::ptrdiff_t>(sent.end));
            for (Span phrase : segment_phrases(slice, table)) {
                phrase.start += sent.start;
                phrase.end += sent.start;
                d.g2.spans.push_back(phrase);
            }
        }
    }
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i].kind != TokenKind::punctuation) d.g1.spans.push_back(Span{i, i + 1, {}});

    // The segmenters guarantee nesting; a violation here is a bug, not input.
    auto contained = [](const Span& inner, const std::vector<Span>& outers) {
        std::size_t hits = 0;
        for (const Span& o : outers)
            if (o.start <= inner.start && inner.end <= o.end) ++hits;
        return hits == 1;
    };
    for (const Span& p : d.g2.spans)
        if (!contained(p, d.g3.spans))
            throw InternalError("phrase span escapes its sentence");
    for (const Span& s : d.g3.spans)
        if (!contained(s, d.g4.spans))
            throw InternalError("sentence span escapes its paragraph");
    return d;
}

}  // namespace hgm::text
