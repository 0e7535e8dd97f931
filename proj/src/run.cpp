#include "hgm/run.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <span>
#include <utility>

#include "hgm/errors.hpp"
#include "hgm/mgat.hpp"
#include "hgm/optim.hpp"
#include "hgm/tape.hpp"
#include "hgm/textseg.hpp"

namespace hgm::run {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct CsvRow {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

std::vector<CsvRow> parse_csv(std::istream& in) {
    std::vector<CsvRow> rows;
    CsvRow row;
    row.line = 1;
    std::string cell;
    std::size_t line = 1;
    bool in_quotes = false;
    bool row_has_cells = false;

    const auto finish_row = [&] {
        row.fields.push_back(cell);
        cell.clear();
        if (row.fields.size() > 1 || !row.fields.front().empty()) rows.push_back(std::move(row));
        row = CsvRow{};
        row_has_cells = false;
    };

    char ch = 0;
    while (in.get(ch)) {
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    cell.push_back('"');
                    in.get(ch);
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                cell.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (cell.empty()) {
                    in_quotes = true;
                } else {
                    cell.push_back(ch);
                }
                break;
            case ',':
                row.fields.push_back(cell);
                cell.clear();
                row_has_cells = true;
                break;
            case '\r':
                if (in.peek() != '\n') {
                    finish_row();
                    ++line;
                    row.line = line;
                }
                break;
            case '\n':
                finish_row();
                ++line;
                row.line = line;
                break;
            default:
                cell.push_back(ch);
        }
    }
    if (in_quotes) throw ValidationError("ingest: unterminated quoted field starting before line " +
                                         std::to_string(line + 1));
    if (row_has_cells || !cell.empty()) finish_row();
    return rows;
}

bool parse_double(const std::string& s, double* out) {
    const std::string t = trimmed(s);
    if (t.empty()) return false;
    std::size_t used = 0;
    try {
        *out = std::stod(t, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == t.size() && std::isfinite(*out);
}

std::string cpc_class_key(const feat::CpcCode& c) {
    std::string k;
    k.push_back(static_cast<char>('0' + c.cls / 10));
    k.push_back(static_cast<char>('0' + c.cls % 10));
    return k;
}

std::string cpc_subclass_key(const feat::CpcCode& c) {
    return c.subclass == feat::CpcCode::kNoSubclass ? std::string() : std::string(1, c.subclass);
}

}  // namespace

std::vector<std::string> content_tokens(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& tok : text::tokenize(text).tokens)
        if (tok.kind == text::TokenKind::word || tok.kind == text::TokenKind::number)
            out.push_back(tok.surface);
    return out;
}

IngestReport ingest_csv(std::istream& in) {
    const std::vector<CsvRow> rows = parse_csv(in);
    if (rows.empty()) throw ValidationError("ingest: missing header row");

    std::vector<std::string> header = rows.front().fields;
    if (!header.empty() && header.front().rfind("\xef\xbb\xbf", 0) == 0)
        header.front().erase(0, 3);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(trimmed(header[i]), i);
    static const std::array<const char*, 5> kRequired = {"id", "anchor", "target", "context",
                                                         "score"};
    for (const char* name : kRequired)
        if (!col.count(name))
            throw ValidationError(std::string("ingest: missing required column: ") + name);

    IngestReport report;
    std::set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const CsvRow& row = rows[r];
        ++report.rows_seen;
        const auto skip = [&](const std::string& why) {
            report.skipped.push_back("line " + std::to_string(row.line) + ": " + why);
        };
        if (row.fields.size() != header.size()) {
            skip("expected " + std::to_string(header.size()) + " fields, got " +
                 std::to_string(row.fields.size()));
            continue;
        }
        PhrasePairRecord rec;
        rec.id = row.fields[col.at("id")];
        rec.anchor = row.fields[col.at("anchor")];
        rec.target = row.fields[col.at("target")];
        rec.context_raw = row.fields[col.at("context")];
        const std::string& score_text = row.fields[col.at("score")];

        bool empty_field = false;
        for (const char* name : kRequired) {
            if (row.fields[col.at(name)].empty()) {
                skip(std::string("empty ") + name + " field");
                empty_field = true;
                break;
            }
        }
        if (empty_field) continue;
        if (!parse_double(score_text, &rec.score)) {
            skip("score is not a number: " + score_text);
            continue;
        }
        if (rec.score < 0.0 || rec.score > 1.0) {
            skip("score out of range: " + score_text);
            continue;
        }
        try {
            rec.context = feat::cpc_parse(rec.context_raw);
        } catch (const ParseError& e) {
            skip(e.what());
            continue;
        }
        if (!seen.insert(rec.id).second) {
            skip("duplicate id: " + rec.id);
            continue;
        }
        if (content_tokens(rec.anchor).empty()) {
            skip("anchor has no usable word tokens");
            continue;
        }
        if (content_tokens(rec.target).empty()) {
            skip("target has no usable word tokens");
            continue;
        }
        report.records.push_back(std::move(rec));
    }
    return report;
}

IngestReport ingest_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return ingest_csv(in);
}

ScoreHistogram score_histogram(const std::vector<PhrasePairRecord>& records, double width) {
    if (records.empty()) throw ValidationError("stats: need at least one record");
    if (width <= 0.0 || width > 1.0)
        throw ValidationError("stats: bucket width must lie in (0, 1]");
    const auto buckets = static_cast<std::size_t>(std::ceil(1.0 / width - 1e-12));
    ScoreHistogram h;
    h.total = records.size();
    h.counts.assign(buckets, 0);
    h.edges.resize(buckets + 1);
    for (std::size_t b = 0; b <= buckets; ++b)
        h.edges[b] = std::min(1.0, width * static_cast<double>(b));
    for (const PhrasePairRecord& r : records) {
        auto b = static_cast<std::size_t>(r.score / width);
        if (b >= buckets) b = buckets - 1;
        ++h.counts[b];
        if (r.score == 0.0) ++h.zero_count;
    }
    h.percentages.resize(buckets);
    const double denom = static_cast<double>(h.total);
    for (std::size_t b = 0; b < buckets; ++b)
        h.percentages[b] = 100.0 * static_cast<double>(h.counts[b]) / denom;
    h.zero_share = 100.0 * static_cast<double>(h.zero_count) / denom;
    return h;
}

std::vector<std::pair<std::string, std::size_t>> top_terms(
    const std::vector<PhrasePairRecord>& records, std::size_t limit) {
    std::map<std::string, std::size_t> counts;
    for (const PhrasePairRecord& r : records) {
        for (const auto& tok : text::tokenize(r.anchor).tokens)
            if (tok.kind == text::TokenKind::word) ++counts[tok.surface];
        for (const auto& tok : text::tokenize(r.target).tokens)
            if (tok.kind == text::TokenKind::word) ++counts[tok.surface];
    }
    std::vector<std::pair<std::string, std::size_t>> terms(counts.begin(), counts.end());
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (terms.size() > limit) terms.resize(limit);
    return terms;
}

std::map<char, std::size_t> section_counts(const std::vector<PhrasePairRecord>& records) {
    std::map<char, std::size_t> out;
    for (const PhrasePairRecord& r : records) ++out[r.context.section];
    return out;
}

void write_histogram_csv(const ScoreHistogram& h, std::ostream& out) {
    out << "bucket,lo,hi,count,percent\n";
    char lo[16], hi[16], pc[32];
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        std::snprintf(lo, sizeof lo, "%.2f", h.edges[b]);
        std::snprintf(hi, sizeof hi, "%.2f", h.edges[b + 1]);
        std::snprintf(pc, sizeof pc, "%.4f", h.percentages[b]);
        out << b << ',' << lo << ',' << hi << ',' << h.counts[b] << ',' << pc << '\n';
    }
    std::snprintf(pc, sizeof pc, "%.4f", h.zero_share);
    out << "exact_zero,0.00,0.00," << h.zero_count << ',' << pc << '\n';
}

void write_terms_csv(const std::vector<std::pair<std::string, std::size_t>>& terms,
                     std::ostream& out) {
    out << "term,count\n";
    for (const auto& [term, count] : terms) out << term << ',' << count << '\n';
}

void write_sections_csv(const std::map<char, std::size_t>& sections, std::ostream& out) {
    out << "section,count\n";
    for (const auto& [section, count] : sections) out << section << ',' << count << '\n';
}

std::string histogram_table(const ScoreHistogram& h) {
    std::ostringstream out;
    out << "score histogram, " << h.total << " records\n";
    char label[32], pc[32];
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        std::snprintf(label, sizeof label, "[%.2f, %.2f%c", h.edges[b], h.edges[b + 1],
                      b + 1 == h.counts.size() ? ']' : ')');
        std::snprintf(pc, sizeof pc, "%6.2f%%", h.percentages[b]);
        out << "  " << std::left << std::setw(14) << label << std::right << std::setw(8)
            << h.counts[b] << "  " << pc << "  ";
        const auto bar = static_cast<std::size_t>(std::lround(h.percentages[b]));
        for (std::size_t i = 0; i < bar; ++i) out << '#';
        out << '\n';
    }
    std::snprintf(pc, sizeof pc, "%6.2f%%", h.zero_share);
    out << "  " << std::left << std::setw(14) << "exact zeros" << std::right << std::setw(8)
        << h.zero_count << "  " << pc << '\n';
    return out.str();
}

std::string terms_table(const std::vector<std::pair<std::string, std::size_t>>& terms) {
    std::size_t widest = 4;
    for (const auto& [term, count] : terms) widest = std::max(widest, term.size());
    std::ostringstream out;
    out << "top terms\n";
    for (const auto& [term, count] : terms)
        out << "  " << std::left << std::setw(static_cast<int>(widest + 2)) << term << std::right
            << std::setw(8) << count << '\n';
    return out.str();
}

std::string sections_table(const std::map<char, std::size_t>& sections) {
    std::ostringstream out;
    out << "records per section\n";
    for (const auto& [section, count] : sections)
        out << "  " << section << std::right << std::setw(10) << count << '\n';
    return out.str();
}

namespace {

void set_config_key(TrainConfig& c, const std::string& key, const std::string& value,
                    const std::string& where) {
    const auto bad = [&] {
        return ValidationError(where + ": bad value for " + key + ": " + value);
    };
    const auto as_bool = [&] {
        if (value == "1" || value == "true") return true;
        if (value == "0" || value == "false") return false;
        throw bad();
    };
    const auto as_size = [&]() -> std::size_t {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(value, &used);
            if (used != value.size()) throw bad();
            return static_cast<std::size_t>(v);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw bad();
        }
    };
    const auto as_double = [&] {
        double v = 0.0;
        if (!parse_double(value, &v)) throw bad();
        return v;
    };
    if (key == "use_hcl") {
        c.use_hcl = as_bool();
    } else if (key == "use_mgat") {
        c.use_mgat = as_bool();
    } else if (key == "use_msa") {
        c.use_msa = as_bool();
    } else if (key == "steps") {
        c.steps = as_size();
    } else if (key == "lr") {
        c.lr = as_double();
    } else if (key == "eta") {
        c.eta = as_double();
    } else if (key == "lambda") {
        c.lambda = as_double();
    } else if (key == "dim") {
        c.dim = as_size();
    } else if (key == "seed") {
        c.seed = as_size();
    } else {
        throw ValidationError(where + ": unknown key: " + key);
    }
}

}  // namespace

TrainConfig load_train_config(std::istream& in) {
    TrainConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trimmed(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: expected key = value on line " +
                                  std::to_string(line_no));
        set_config_key(config, trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)),
                       "config");
    }
    return config;
}

TrainConfig load_train_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return load_train_config(in);
}

void ParamStore::add(std::string name, Matrix value) {
    if (index_.count(name)) throw ValidationError("param store: duplicate tensor: " + name);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(value));
}

const Matrix& ParamStore::at(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("param store: unknown tensor: " + name);
    return entries_[it->second].second;
}

Matrix& ParamStore::at(const std::string& name) {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("param store: unknown tensor: " + name);
    return entries_[it->second].second;
}

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
    const TrainConfig& c = ckpt.config;
    out << "HGMNET1\n";
    out << "config use_hcl " << (c.use_hcl ? 1 : 0) << '\n';
    out << "config use_mgat " << (c.use_mgat ? 1 : 0) << '\n';
    out << "config use_msa " << (c.use_msa ? 1 : 0) << '\n';
    out << "config steps " << c.steps << '\n';
    out << "config lr " << fmt17(c.lr) << '\n';
    out << "config eta " << fmt17(c.eta) << '\n';
    out << "config lambda " << fmt17(c.lambda) << '\n';
    out << "config dim " << c.dim << '\n';
    out << "config seed " << c.seed << '\n';
    for (const auto& [name, strings] : ckpt.vocab) {
        out << "strings " << name << ' ' << strings.size() << '\n';
        for (const std::string& s : strings) out << s << '\n';
    }
    for (const auto& [name, m] : ckpt.params.entries()) {
        out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                if (j) out << ' ';
                out << fmt17(m(i, j));
            }
            out << '\n';
        }
    }
    out << "end\n";
}

void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    save_checkpoint(ckpt, out);
    out.flush();
    if (!out) throw IoError("cannot write " + path);
}

Checkpoint load_checkpoint(std::istream& in) {
    std::string line;
    const auto next_line = [&](const char* what) {
        if (!std::getline(in, line))
            throw ValidationError(std::string("checkpoint: truncated ") + what);
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };
    next_line("file");
    if (line != "HGMNET1") throw ValidationError("checkpoint: unknown format tag: " + line);

    Checkpoint ckpt;
    bool ended = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line == "end") {
            ended = true;
            break;
        }
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "config") {
            std::string key, value;
            if (!(ls >> key >> value))
                throw ValidationError("checkpoint: bad config line: " + line);
            set_config_key(ckpt.config, key, value, "checkpoint");
        } else if (kind == "strings") {
            std::string name;
            std::size_t count = 0;
            if (!(ls >> name >> count))
                throw ValidationError("checkpoint: bad strings line: " + line);
            if (ckpt.vocab.count(name))
                throw ValidationError("checkpoint: duplicate vocabulary: " + name);
            std::vector<std::string> strings;
            strings.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                next_line("vocabulary");
                strings.push_back(line);
            }
            ckpt.vocab.emplace(std::move(name), std::move(strings));
        } else if (kind == "tensor") {
            std::string name;
            std::size_t rows = 0, cols = 0;
            if (!(ls >> name >> rows >> cols) || rows == 0 || cols == 0)
                throw ValidationError("checkpoint: bad tensor line: " + line);
            Matrix m(rows, cols);
            for (std::size_t i = 0; i < rows; ++i) {
                next_line("tensor");
                std::istringstream vs(line);
                for (std::size_t j = 0; j < cols; ++j)
                    if (!(vs >> m(i, j)))
                        throw ValidationError("checkpoint: bad tensor row in " + name);
            }
            ckpt.params.add(std::move(name), std::move(m));
        } else {
            throw ValidationError("checkpoint: unknown directive: " + kind);
        }
    }
    if (!ended) throw ValidationError("checkpoint: truncated file");
    return ckpt;
}

Checkpoint load_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return load_checkpoint(in);
}

namespace {

struct Vocab {
    std::vector<std::string> words, sections, classes, subclasses, groups;
};

struct Tables {
    feat::EmbeddingTable words, sections, classes, subclasses, groups;
};

Tables make_tables(const Vocab& v, std::size_t dim, num::Rng& rng) {
    return Tables{
        feat::EmbeddingTable(v.words, dim, rng),
        feat::EmbeddingTable(v.sections, dim / 4, rng),
        feat::EmbeddingTable(v.classes, dim / 4, rng),
        feat::EmbeddingTable(v.subclasses, dim / 4, rng),
        feat::EmbeddingTable(v.groups, dim / 4, rng),
    };
}

struct PreparedPair {
    std::vector<std::size_t> anchor_rows, target_rows;
    std::vector<double> anchor_tw, target_tw;
    Matrix cpc_row{1, 1};
    std::string section;
    double label = 0.0;
};

mgat::HeteroGraph make_pair_graph(std::size_t dim) {
    mgat::HeteroGraph g;
    g.add_node("anchor", mgat::Modality::text, Matrix(1, dim));
    g.add_node("target", mgat::Modality::text, Matrix(1, dim));
    g.add_node("context", mgat::Modality::cpc, Matrix(1, dim));
    g.add_edge("anchor", "target", mgat::EdgeKind::semantic);
    g.add_edge("target", "anchor", mgat::EdgeKind::semantic);
    g.add_edge("anchor", "context", mgat::EdgeKind::hierarchy);
    g.add_edge("target", "context", mgat::EdgeKind::hierarchy);
    return g;
}

std::vector<std::string> gat_param_names(const mgat::GatLayerParams& meta) {
    std::vector<std::string> names;
    for (const auto& [m, w] : meta.w)
        names.push_back(std::string("gat.w.") + mgat::modality_name(m));
    for (const auto& [key, a] : meta.a)
        names.push_back(std::string("gat.a.") + mgat::modality_name(key.first) + "." +
                        mgat::modality_name(key.second));
    for (const auto& [m, gate] : meta.gate_raw)
        names.push_back(std::string("gat.gate.") + mgat::modality_name(m));
    return names;
}

struct ForwardSlots {
    num::Var words{};
    num::Var lambda{};
    bool use_msa = false;
    bool use_mgat = false;
    const mgat::GatLayerVars* gat = nullptr;
    const mgat::HeteroGraph* graph = nullptr;
};

struct PairOutputs {
    num::Var pool_a{}, pool_b{}, pred{};
};

PairOutputs forward_pair(num::Tape& t, const ForwardSlots& slots, const PreparedPair& p) {
    const auto pooled = [&](const std::vector<std::size_t>& rows, const std::vector<double>& tw) {
        num::Var x = t.gather_rows(slots.words, rows);
        if (slots.use_msa) {
            const msa::SparsityPattern pattern = msa::dense_pattern(rows.size(), text::Level::word);
            const num::Var scores = msa::attn_scores(t, x, x, pattern, slots.lambda, tw);
            x = t.matmul(t.softmax_rows(scores), x);
        }
        return t.mean_rows(x);
    };
    PairOutputs out;
    out.pool_a = pooled(p.anchor_rows, p.anchor_tw);
    out.pool_b = pooled(p.target_rows, p.target_tw);
    if (slots.use_mgat) {
        const std::vector<num::Var> feats = {out.pool_a, out.pool_b, t.constant(p.cpc_row)};
        const std::vector<num::Var> updated = mgat::layer_forward(t, *slots.graph, feats, *slots.gat);
        out.pool_a = updated[0];
        out.pool_b = updated[1];
    }
    out.pred = t.add_scalar(t.scale(num::cosine(t, out.pool_a, out.pool_b), 0.5), 0.5);
    return out;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& anchors,
                  const std::vector<std::vector<std::string>>& targets,
                  const std::vector<PhrasePairRecord>& records) {
    std::set<std::string> words, sections, classes, subclasses, groups;
    for (const auto& tokens : anchors) words.insert(tokens.begin(), tokens.end());
    for (const auto& tokens : targets) words.insert(tokens.begin(), tokens.end());
    for (const PhrasePairRecord& r : records) {
        sections.insert(std::string(1, r.context.section));
        classes.insert(cpc_class_key(r.context));
        subclasses.insert(cpc_subclass_key(r.context));
        groups.insert(std::to_string(r.context.main_group));
    }
    Vocab v;
    v.words.assign(words.begin(), words.end());
    v.sections.assign(sections.begin(), sections.end());
    v.classes.assign(classes.begin(), classes.end());
    v.subclasses.assign(subclasses.begin(), subclasses.end());
    v.groups.assign(groups.begin(), groups.end());
    return v;
}

PreparedPair prepare_pair(const std::vector<std::string>& anchor_tokens,
                          const std::vector<std::string>& target_tokens,
                          const PhrasePairRecord& record, const Tables& tables,
                          const std::map<std::string, double>& term_weights) {
    PreparedPair p;
    for (const std::string& tok : anchor_tokens) {
        p.anchor_rows.push_back(tables.words.row_of(tok));
        const auto it = term_weights.find(tok);
        p.anchor_tw.push_back(it == term_weights.end() ? 0.0 : it->second);
    }
    for (const std::string& tok : target_tokens) {
        p.target_rows.push_back(tables.words.row_of(tok));
        const auto it = term_weights.find(tok);
        p.target_tw.push_back(it == term_weights.end() ? 0.0 : it->second);
    }
    p.cpc_row = feat::cpc_embed(record.context, tables.sections, tables.classes,
                                tables.subclasses, tables.groups);
    p.section = std::string(1, record.context.section);
    p.label = record.score;
    return p;
}

}  // namespace

TrainResult train(const std::vector<PhrasePairRecord>& records, const TrainConfig& config,
                  const hcl::Lexicon& lexicon) {
    if (records.empty()) throw ValidationError("train: need at least one record");
    if (config.dim == 0 || config.dim % 4 != 0)
        throw ValidationError("train: dim must be a positive multiple of 4");
    if (config.lr < 0.0) throw ValidationError("train: lr must be nonnegative");
    if (config.lambda < 0.0) throw ValidationError("train: lambda must be nonnegative");

    num::Rng rng(config.seed);
    std::vector<std::vector<std::string>> anchors, targets;
    anchors.reserve(records.size());
    targets.reserve(records.size());
    for (const PhrasePairRecord& r : records) {
        std::vector<std::string> a = content_tokens(r.anchor);
        std::vector<std::string> b = content_tokens(r.target);
        if (a.empty())
            throw ValidationError("train: record " + r.id + " has no usable anchor tokens");
        if (b.empty())
            throw ValidationError("train: record " + r.id + " has no usable target tokens");
        if (!lexicon.empty()) a = hcl::augment_mask(a, lexicon, 0.15, rng);
        anchors.push_back(std::move(a));
        targets.push_back(std::move(b));
    }

    const Vocab vocab = build_vocab(anchors, targets, records);
    Tables tables = make_tables(vocab, config.dim, rng);

    std::vector<std::pair<std::string, std::vector<std::string>>> corpus;
    corpus.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::vector<std::string> doc = anchors[i];
        doc.insert(doc.end(), targets[i].begin(), targets[i].end());
        corpus.emplace_back(records[i].id, std::move(doc));
    }
    const feat::TfIdfModel tfidf = feat::TfIdfModel::fit(corpus);

    std::vector<PreparedPair> pairs;
    pairs.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        pairs.push_back(prepare_pair(anchors[i], targets[i], records[i], tables,
                                     tfidf.doc_weights_normalized(records[i].id)));

    ParamStore params;
    params.add("embed.words", tables.words.weights());
    params.add("embed.cpc_sections", tables.sections.weights());
    params.add("embed.cpc_classes", tables.classes.weights());
    params.add("embed.cpc_subclasses", tables.subclasses.weights());
    params.add("embed.cpc_groups", tables.groups.weights());

    mgat::GatLayerParams gat_meta;
    std::vector<std::string> gat_names;
    if (config.use_mgat) {
        gat_meta = mgat::GatLayerParams::init(config.dim, 2, rng);
        gat_names = gat_param_names(gat_meta);
        const std::vector<Matrix> flat = mgat::flatten_params(gat_meta);
        for (std::size_t i = 0; i < flat.size(); ++i) params.add(gat_names[i], flat[i]);
    }
    if (config.use_msa) params.add("msa.lambda", Matrix(1, 1, config.lambda));
    if (config.use_hcl) params.add("hcl.weights", Matrix(1, 3));

    std::vector<std::string> trainable = {"embed.words"};
    trainable.insert(trainable.end(), gat_names.begin(), gat_names.end());
    if (config.use_msa) trainable.push_back("msa.lambda");
    if (config.use_hcl) trainable.push_back("hcl.weights");

    const mgat::HeteroGraph graph = make_pair_graph(config.dim);
    hcl::NegativeQueue queue(64);
    hcl::PrototypeSet protos(0.9);

    TrainResult result;
    std::vector<Matrix> last_good;
    const auto snapshot = [&] {
        last_good.clear();
        for (const std::string& name : trainable) last_good.push_back(params.at(name));
    };
    const auto restore = [&] {
        for (std::size_t i = 0; i < trainable.size(); ++i)
            params.at(trainable[i]) = last_good[i];
    };
    snapshot();

    for (std::size_t step = 0; step < config.steps; ++step) {
        num::Tape t;
        bool failed = false;
        try {
            std::vector<num::Var> leaves;
            leaves.reserve(trainable.size());
            for (const std::string& name : trainable) leaves.push_back(t.leaf(params.at(name)));

            ForwardSlots slots;
            slots.words = leaves[0];
            slots.use_msa = config.use_msa;
            slots.use_mgat = config.use_mgat;
            mgat::GatLayerVars gat_vars;
            if (config.use_mgat) {
                gat_vars = mgat::assemble_params(
                    gat_meta, std::span<const num::Var>(leaves.data() + 1, gat_names.size()));
                slots.gat = &gat_vars;
                slots.graph = &graph;
            }
            std::size_t cursor = 1 + gat_names.size();
            slots.lambda = config.use_msa ? leaves[cursor] : t.constant(Matrix(1, 1));
            if (config.use_msa) ++cursor;
            num::Var hcl_weights{};
            if (config.use_hcl) hcl_weights = leaves[cursor];

            std::vector<num::Var> sqs, pools_a, pools_b;
            sqs.reserve(pairs.size());
            pools_a.reserve(pairs.size());
            pools_b.reserve(pairs.size());
            for (const PreparedPair& p : pairs) {
                const PairOutputs out = forward_pair(t, slots, p);
                const num::Var err = t.add_scalar(out.pred, -p.label);
                sqs.push_back(t.mul(err, err));
                pools_a.push_back(out.pool_a);
                pools_b.push_back(out.pool_b);
            }
            const num::Var mse = t.mean_all(t.concat_cols(sqs));
            num::Var total = mse;

            double hcl_value = 0.0;
            std::vector<std::size_t> qualifying;
            std::map<std::string, Matrix> member_means;
            if (config.use_hcl) {
                for (std::size_t i = 0; i < pairs.size(); ++i)
                    if (pairs[i].label >= 0.75) qualifying.push_back(i);
                const num::Var tau = t.constant(Matrix(1, 1, 0.07));
                num::Var loss_w = t.constant(Matrix(1, 1));
                num::Var loss_s = t.constant(Matrix(1, 1));
                if (!qualifying.empty()) {
                    std::vector<num::Var> word_terms, qa, qb;
                    for (const std::size_t i : qualifying) {
                        word_terms.push_back(hcl::loss_word(t, pools_a[i], pools_b[i], queue, tau));
                        qa.push_back(pools_a[i]);
                        qb.push_back(pools_b[i]);
                    }
                    loss_w = t.mean_all(t.concat_cols(word_terms));
                    const num::Var att =
                        hcl::sent_sim_matrix(t, t.concat_rows(qa), t.concat_rows(qb));
                    std::vector<hcl::AlignmentPair> aligned;
                    for (std::size_t j = 0; j < qualifying.size(); ++j)
                        aligned.push_back(hcl::make_alignment_pair(j, j, 1, qualifying.size()));
                    loss_s = hcl::loss_sentence(t, aligned, att);
                }
                std::map<std::string, std::vector<num::Var>> members;
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    members[pairs[i].section].push_back(pools_a[i]);
                    members[pairs[i].section].push_back(pools_b[i]);
                }
                std::map<std::string, num::Var> proto_vars;
                for (const auto& [section, member_vars] : members) {
                    if (!protos.has(section)) {
                        Matrix mean(1, config.dim);
                        for (const num::Var v : member_vars) mean = num::add(mean, t.value(v));
                        mean = num::scale(mean, 1.0 / static_cast<double>(member_vars.size()));
                        protos.init(section, std::move(mean));
                    }
                    proto_vars.emplace(section, t.constant(protos.prototype(section)));
                }
                hcl::PrototypeLossTerms proto_terms = hcl::loss_prototype(t, proto_vars, members);
                member_means = std::move(proto_terms.member_means);
                const num::Var hcl_total =
                    hcl::loss_hcl(t, hcl_weights, loss_w, loss_s, proto_terms.loss);
                hcl_value = t.value(hcl_total)(0, 0);
                total = t.add(mse, t.scale(hcl_total, config.eta));
            }

            const double total_value = t.value(total)(0, 0);
            if (!std::isfinite(total_value)) {
                failed = true;
            } else {
                result.curve.push_back({step, total_value, t.value(mse)(0, 0), hcl_value});
                if (config.lr > 0.0) {
                    snapshot();
                    t.backward(total);
                    std::vector<Matrix> values, grads;
                    values.reserve(trainable.size());
                    grads.reserve(trainable.size());
                    for (std::size_t i = 0; i < trainable.size(); ++i) {
                        values.push_back(params.at(trainable[i]));
                        grads.push_back(t.grad(leaves[i]));
                    }
                    num::sgd_step(values, grads, config.lr);
                    for (std::size_t i = 0; i < trainable.size(); ++i)
                        params.at(trainable[i]) = std::move(values[i]);
                    if (config.use_msa) {
                        double& lv = params.at("msa.lambda")(0, 0);
                        if (lv < 0.0) lv = 0.0;
                    }
                    if (config.use_hcl) {
                        for (const std::size_t i : qualifying) queue.push(t.value(pools_b[i]));
                        for (const auto& [section, mean] : member_means)
                            protos.ema_update(section, mean);
                    }
                }
                ++result.steps_run;
            }
        } catch (const NumericError&) {
            failed = true;
        }
        if (failed) {
            result.diverged = true;
            restore();
            break;
        }
    }

    if (!result.curve.empty()) {
        result.initial_loss = result.curve.front().total;
        result.final_loss = result.curve.back().total;
    }

    for (const auto& [section, proto] : protos.all())
        params.add("hcl.prototype." + section, proto);

    result.checkpoint.config = config;
    result.checkpoint.params = std::move(params);
    result.checkpoint.vocab = {{"words", vocab.words},
                               {"cpc_sections", vocab.sections},
                               {"cpc_classes", vocab.classes},
                               {"cpc_subclasses", vocab.subclasses},
                               {"cpc_groups", vocab.groups}};
    return result;
}

void write_curve_csv(const TrainResult& result, std::ostream& out) {
    out << "step,total,mse,hcl\n";
    for (const CurvePoint& p : result.curve)
        out << p.step << ',' << fmt17(p.total) << ',' << fmt17(p.mse) << ',' << fmt17(p.hcl)
            << '\n';
}

double score_pair(const Checkpoint& ckpt, const std::string& anchor, const std::string& target,
                  const std::string& context) {
    const TrainConfig& config = ckpt.config;
    if (config.dim == 0 || config.dim % 4 != 0)
        throw ValidationError("score: checkpoint dim must be a positive multiple of 4");
    static const std::array<const char*, 5> kVocabs = {"words", "cpc_sections", "cpc_classes",
                                                       "cpc_subclasses", "cpc_groups"};
    for (const char* name : kVocabs)
        if (!ckpt.vocab.count(name))
            throw ValidationError(std::string("score: checkpoint missing vocabulary: ") + name);

    Vocab vocab;
    vocab.words = ckpt.vocab.at("words");
    vocab.sections = ckpt.vocab.at("cpc_sections");
    vocab.classes = ckpt.vocab.at("cpc_classes");
    vocab.subclasses = ckpt.vocab.at("cpc_subclasses");
    vocab.groups = ckpt.vocab.at("cpc_groups");
    num::Rng table_rng(1);
    Tables tables = make_tables(vocab, config.dim, table_rng);

    const auto fit = [&](feat::EmbeddingTable& table, const std::string& name) {
        if (!ckpt.params.has(name))
            throw ValidationError("score: checkpoint missing tensor: " + name);
        const Matrix& stored = ckpt.params.at(name);
        const Matrix& expected = table.weights();
        if (stored.rows() != expected.rows() || stored.cols() != expected.cols())
            throw ValidationError("score: tensor " + name + " is " +
                                  std::to_string(stored.rows()) + "x" +
                                  std::to_string(stored.cols()) + ", expected " +
                                  std::to_string(expected.rows()) + "x" +
                                  std::to_string(expected.cols()));
        table.weights() = stored;
    };
    fit(tables.words, "embed.words");
    fit(tables.sections, "embed.cpc_sections");
    fit(tables.classes, "embed.cpc_classes");
    fit(tables.subclasses, "embed.cpc_subclasses");
    fit(tables.groups, "embed.cpc_groups");

    const std::vector<std::string> anchor_tokens = content_tokens(anchor);
    const std::vector<std::string> target_tokens = content_tokens(target);
    if (anchor_tokens.empty()) throw ValidationError("score: anchor has no usable word tokens");
    if (target_tokens.empty()) throw ValidationError("score: target has no usable word tokens");

    PhrasePairRecord record;
    record.context = feat::cpc_parse(context);
    record.score = 0.0;

    std::vector<std::string> doc = anchor_tokens;
    doc.insert(doc.end(), target_tokens.begin(), target_tokens.end());
    const feat::TfIdfModel tfidf = feat::TfIdfModel::fit({{"pair", std::move(doc)}});
    const PreparedPair pair =
        prepare_pair(anchor_tokens, target_tokens, record, tables,
                     tfidf.doc_weights_normalized("pair"));

    num::Tape t;
    ForwardSlots slots;
    slots.words = t.constant(tables.words.weights());
    slots.use_msa = config.use_msa;
    slots.use_mgat = config.use_mgat;

    mgat::HeteroGraph graph;
    mgat::GatLayerParams gat_meta;
    mgat::GatLayerVars gat_vars;
    std::vector<num::Var> gat_slots;
    if (config.use_mgat) {
        num::Rng meta_rng(1);
        gat_meta = mgat::GatLayerParams::init(config.dim, 2, meta_rng);
        const std::vector<std::string> names = gat_param_names(gat_meta);
        const std::vector<Matrix> expected = mgat::flatten_params(gat_meta);
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (!ckpt.params.has(names[i]))
                throw ValidationError("score: checkpoint missing tensor: " + names[i]);
            const Matrix& stored = ckpt.params.at(names[i]);
            if (stored.rows() != expected[i].rows() || stored.cols() != expected[i].cols())
                throw ValidationError("score: tensor " + names[i] + " is " +
                                      std::to_string(stored.rows()) + "x" +
                                      std::to_string(stored.cols()) + ", expected " +
                                      std::to_string(expected[i].rows()) + "x" +
                                      std::to_string(expected[i].cols()));
            gat_slots.push_back(t.constant(stored));
        }
        gat_vars = mgat::assemble_params(gat_meta, gat_slots);
        graph = make_pair_graph(config.dim);
        slots.gat = &gat_vars;
        slots.graph = &graph;
    }
    if (config.use_msa) {
        if (!ckpt.params.has("msa.lambda"))
            throw ValidationError("score: checkpoint missing tensor: msa.lambda");
        const Matrix& lambda = ckpt.params.at("msa.lambda");
        if (lambda.rows() != 1 || lambda.cols() != 1)
            throw ValidationError("score: tensor msa.lambda must be 1x1");
        slots.lambda = t.constant(lambda);
    } else {
        slots.lambda = t.constant(Matrix(1, 1));
    }
    if (config.use_hcl && !ckpt.params.has("hcl.weights"))
        throw ValidationError("score: checkpoint missing tensor: hcl.weights");

    const PairOutputs out = forward_pair(t, slots, pair);
    return t.value(out.pred)(0, 0);
}

GraphExportReport export_pair_graph(
    const std::vector<PhrasePairRecord>& records,
    const std::vector<std::pair<std::string, std::string>>& citations, std::size_t dim,
    std::uint64_t seed, std::ostream& out) {
    if (records.empty()) throw ValidationError("graph: need at least one record");
    if (dim == 0 || dim % 4 != 0)
        throw ValidationError("graph: dim must be a positive multiple of 4");

    std::vector<std::vector<std::string>> anchors, targets;
    anchors.reserve(records.size());
    targets.reserve(records.size());
    for (const PhrasePairRecord& r : records) {
        anchors.push_back(content_tokens(r.anchor));
        targets.push_back(content_tokens(r.target));
        if (anchors.back().empty())
            throw ValidationError("graph: record " + r.id + " has no usable anchor tokens");
        if (targets.back().empty())
            throw ValidationError("graph: record " + r.id + " has no usable target tokens");
    }
    const Vocab vocab = build_vocab(anchors, targets, records);
    num::Rng rng(seed);
    const Tables tables = make_tables(vocab, dim, rng);

    std::vector<mgat::GraphRecord> graph_records;
    graph_records.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        graph_records.push_back(
            {records[i].id, {anchors[i], targets[i]}, {records[i].context_raw}});

    mgat::GraphFeaturizer featurizer;
    featurizer.words = &tables.words;
    featurizer.sections = &tables.sections;
    featurizer.classes = &tables.classes;
    featurizer.subclasses = &tables.subclasses;
    featurizer.groups = &tables.groups;

    mgat::BuildReport build_report;
    const mgat::HeteroGraph g = mgat::build_graph(graph_records, citations, featurizer,
                                                  &build_report);
    mgat::export_graph(g, out);
    return {g.nodes().size(), g.edges().size(), std::move(build_report.warnings)};
}

namespace {

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

BenchResult bench(const std::vector<std::size_t>& ns, const msa::SweepConfig& config,
                  std::size_t repeats) {
    if (repeats == 0) throw ValidationError("bench: repeats must be positive");
    std::vector<std::vector<msa::SweepRow>> runs;
    std::vector<std::vector<msa::ComplexityReport>> reports;
    runs.reserve(repeats);
    reports.reserve(repeats);
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        std::vector<msa::ComplexityReport> r;
        runs.push_back(msa::complexity_sweep(ns, config, &r));
        reports.push_back(std::move(r));
    }

    BenchResult result;
    result.rows = runs.front();
    result.reports = reports.front();
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        std::vector<double> walls;
        walls.reserve(repeats);
        for (const auto& run : runs) walls.push_back(run[i].wall_ms);
        result.rows[i].wall_ms = median(std::move(walls));

        double total = 0.0;
        for (std::size_t l = 0; l < result.reports[i].levels.size(); ++l) {
            std::vector<double> level_walls;
            level_walls.reserve(repeats);
            for (const auto& rep : reports) level_walls.push_back(rep[i].levels[l].wall_ms);
            result.reports[i].levels[l].wall_ms = median(std::move(level_walls));
            total += result.reports[i].levels[l].wall_ms;
        }
        result.reports[i].total_wall_ms = total;
    }
    return result;
}

void write_bench_complexity_csv(const BenchResult& result, const std::vector<std::size_t>& ns,
                                std::ostream& out) {
    if (result.reports.size() != ns.size())
        throw DimensionError("bench: " + std::to_string(result.reports.size()) +
                             " reports for " + std::to_string(ns.size()) + " lengths");
    out << "n,level,units,pairs,pairs_per_nlogn,wall_ms\n";
    char ratio[32], wall[32];
    for (std::size_t i = 0; i < ns.size(); ++i) {
        for (const msa::LevelCost& level : result.reports[i].levels) {
            std::snprintf(ratio, sizeof ratio, "%.6g", level.pairs_per_nlogn);
            std::snprintf(wall, sizeof wall, "%.3f", level.wall_ms);
            out << ns[i] << ',' << msa::level_name(level.level) << ',' << level.units << ','
                << level.pairs << ',' << ratio << ',' << wall << '\n';
        }
    }
}

}  // namespace hgm::run
