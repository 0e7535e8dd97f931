#include "hgm/mgat.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "hgm/errors.hpp"

namespace hgm::mgat {

using hgm::num::Matrix;
using hgm::num::Tape;
using hgm::num::Var;

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::text: return "text";
        case Modality::cpc: return "cpc";
        case Modality::cite: return "cite";
    }
    throw InternalError("modality_name: unhandled modality");
}

const char* edge_kind_name(EdgeKind k) {
    switch (k) {
        case EdgeKind::semantic: return "semantic";
        case EdgeKind::hierarchy: return "hierarchy";
        case EdgeKind::citation: return "citation";
    }
    throw InternalError("edge_kind_name: unhandled edge kind");
}

std::size_t HeteroGraph::add_node(std::string id, Modality modality, Matrix feature) {
    if (id.empty()) throw ValidationError("add_node: empty node id");
    if (index_.count(id)) throw ValidationError("add_node: duplicate node id '" + id + "'");
    if (feature.rows() != 1 || feature.cols() == 0)
        throw DimensionError("add_node: feature must be a nonempty row vector");
    if (!nodes_.empty() && feature.cols() != width_)
        throw DimensionError("add_node: feature width " + std::to_string(feature.cols()) +
                             " does not match graph width " + std::to_string(width_));
    width_ = feature.cols();
    const std::size_t idx = nodes_.size();
    index_.emplace(id, idx);
    nodes_.push_back(GraphNode{std::move(id), modality, std::move(feature)});
    in_adj_.emplace_back();
    return idx;
}

std::size_t HeteroGraph::index_of(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown node id '" + id + "'");
    return it->second;
}

void HeteroGraph::add_edge(const std::string& src, const std::string& dst, EdgeKind kind) {
    const std::size_t s = index_of(src);
    const std::size_t d = index_of(dst);
    const Modality ms = nodes_[s].modality;
    const Modality md = nodes_[d].modality;
    switch (kind) {
        case EdgeKind::semantic:
            if (ms != Modality::text || md != Modality::text)
                throw ValidationError("add_edge: semantic edges connect text to text");
            in_adj_[d][Modality::text].push_back(s);
            break;
        case EdgeKind::hierarchy:
            if (ms != Modality::text || md != Modality::cpc)
                throw ValidationError("add_edge: hierarchy edges connect text to cpc");
            in_adj_[s][Modality::cpc].push_back(d);
            break;
        case EdgeKind::citation:
            if (ms != Modality::cite || md != Modality::text)
                throw ValidationError("add_edge: citation edges connect cite to text");
            in_adj_[d][Modality::cite].push_back(s);
            break;
    }
    edges_.push_back(GraphEdge{s, d, kind});
}

const std::map<Modality, std::vector<std::size_t>>& HeteroGraph::update_in(std::size_t q) const {
    if (q >= nodes_.size()) throw ValidationError("update_in: node index out of range");
    return in_adj_[q];
}

namespace {

constexpr Modality kModalities[] = {Modality::text, Modality::cpc, Modality::cite};

double unit_gate_raw() { return std::log(std::exp(1.0) - 1.0); }

}  // namespace

GatLayerParams GatLayerParams::init(std::size_t dim, std::size_t heads, hgm::num::Rng& rng) {
    GatLayerParams p;
    p.dim = dim;
    p.heads = heads;
    for (Modality m : kModalities) p.w[m] = Matrix::uniform(dim, dim, rng, -0.1, 0.1);
    for (Modality m1 : kModalities)
        for (Modality m2 : kModalities)
            p.a[{m1, m2}] = Matrix::uniform(1, 2 * dim, rng, -0.1, 0.1);
    for (Modality m : kModalities) p.gate_raw[m] = unit_gate_raw();
    p.validate();
    return p;
}

void GatLayerParams::validate() const {
    if (dim == 0) throw ValidationError("layer params: dim must be positive");
    if (heads == 0) throw ValidationError("layer params: at least one head");
    if (dim % heads != 0)
        throw ValidationError("layer params: head count " + std::to_string(heads) +
                              " does not divide width " + std::to_string(dim));
    if (!std::isfinite(leaky_slope)) throw NumericError("layer params: non-finite slope");
    for (const auto& [m, mat] : w) {
        if (mat.rows() != dim || mat.cols() != dim)
            throw DimensionError(std::string("layer params: projection for ") + modality_name(m) +
                                 " must be " + std::to_string(dim) + "x" + std::to_string(dim));
        if (!mat.all_finite())
            throw NumericError(std::string("layer params: non-finite projection for ") +
                               modality_name(m));
        if (!gate_raw.count(m))
            throw ValidationError(std::string("layer params: missing gate for ") +
                                  modality_name(m));
    }
    for (const auto& [key, mat] : a) {
        if (mat.rows() != 1 || mat.cols() != 2 * dim)
            throw DimensionError("layer params: attention vectors must be 1x" +
                                 std::to_string(2 * dim));
        if (!mat.all_finite()) throw NumericError("layer params: non-finite attention vector");
        if (!w.count(key.first) || !w.count(key.second))
            throw ValidationError("layer params: attention pair references a modality "
                                  "without a projection");
    }
    for (const auto& [m, raw] : gate_raw)
        if (!std::isfinite(raw))
            throw NumericError(std::string("layer params: non-finite gate for ") +
                               modality_name(m));
}

std::vector<Matrix> flatten_params(const GatLayerParams& params) {
    std::vector<Matrix> out;
    for (const auto& [m, mat] : params.w) out.push_back(mat);
    for (const auto& [key, mat] : params.a) out.push_back(mat);
    for (const auto& [m, raw] : params.gate_raw)
        out.push_back(Matrix(1, 1, std::vector<double>{raw}));
    return out;
}

GatLayerVars assemble_params(const GatLayerParams& meta, std::span<const Var> slots) {
    const std::size_t needed = meta.w.size() + meta.a.size() + meta.gate_raw.size();
    if (slots.size() != needed)
        throw ValidationError("assemble_params: expected " + std::to_string(needed) +
                              " parameter slots, got " + std::to_string(slots.size()));
    GatLayerVars vars;
    vars.dim = meta.dim;
    vars.heads = meta.heads;
    vars.leaky_slope = meta.leaky_slope;
    std::size_t i = 0;
    for (const auto& [m, mat] : meta.w) vars.w[m] = slots[i++];
    for (const auto& [key, mat] : meta.a) vars.a[key] = slots[i++];
    for (const auto& [m, raw] : meta.gate_raw) vars.gate_raw[m] = slots[i++];
    return vars;
}

GatLayerVars lift_params(Tape& t, const GatLayerParams& params) {
    params.validate();
    std::vector<Var> slots;
    for (const Matrix& m : flatten_params(params)) slots.push_back(t.leaf(m));
    return assemble_params(params, slots);
}

namespace {

// Attention state for one destination node: the projection cache is shared
// across destinations so each (node, modality) product hits the tape once.
class LayerContext {
public:
    LayerContext(Tape& t, const HeteroGraph& g, std::span<const Var> features,
                 const GatLayerVars& vars)
        : t_(t), g_(g), features_(features), vars_(vars) {}

    Var projection(std::size_t node, Modality m) {
        const auto key = std::make_pair(node, m);
        const auto it = proj_.find(key);
        if (it != proj_.end()) return it->second;
        const auto wit = vars_.w.find(m);
        if (wit == vars_.w.end())
            throw ValidationError(std::string("layer_forward: missing projection for ") +
                                  modality_name(m));
        const Var p = t_.matmul(features_[node], wit->second);
        proj_.emplace(key, p);
        return p;
    }

    Var gate(Modality m) {
        const auto it = gate_.find(m);
        if (it != gate_.end()) return it->second;
        const auto rit = vars_.gate_raw.find(m);
        if (rit == vars_.gate_raw.end())
            throw ValidationError(std::string("layer_forward: missing gate for ") +
                                  modality_name(m));
        const Var g = t_.softplus(rit->second);
        gate_.emplace(m, g);
        return g;
    }

    Var head_slice(Var row, std::size_t start, std::size_t count) {
        std::vector<std::pair<std::size_t, std::size_t>> entries;
        entries.reserve(count);
        for (std::size_t j = 0; j < count; ++j) entries.emplace_back(0, start + j);
        return t_.gather_entries(row, std::move(entries));
    }

    // sigma(a_{m1,mq}^T [W_{m1} h_p || W_{mq} h_q]) on one head's columns.
    Var score(std::size_t p, Modality m1, Modality mq, Var proj_q_slice, std::size_t head,
              std::size_t hw) {
        const auto ait = vars_.a.find({m1, mq});
        if (ait == vars_.a.end())
            throw ValidationError(std::string("layer_forward: missing attention vector (") +
                                  modality_name(m1) + " -> " + modality_name(mq) + ")");
        const Var p_slice = head_slice(projection(p, m1), head * hw, hw);
        const std::array<Var, 2> parts{p_slice, proj_q_slice};
        const Var pair_vec = t_.concat_cols(parts);
        std::vector<std::pair<std::size_t, std::size_t>> cols;
        cols.reserve(2 * hw);
        for (std::size_t j = 0; j < hw; ++j) cols.emplace_back(0, head * hw + j);
        for (std::size_t j = 0; j < hw; ++j) cols.emplace_back(0, vars_.dim + head * hw + j);
        const Var a_slice = t_.gather_entries(ait->second, std::move(cols));
        return t_.leaky_relu(dot(t_, a_slice, pair_vec), vars_.leaky_slope);
    }

    Tape& tape() { return t_; }

private:
    Tape& t_;
    const HeteroGraph& g_;
    std::span<const Var> features_;
    const GatLayerVars& vars_;
    std::map<std::pair<std::size_t, Modality>, Var> proj_;
    std::map<Modality, Var> gate_;
};

}  // namespace

std::vector<Var> layer_forward(Tape& t, const HeteroGraph& g, std::span<const Var> features,
                               const GatLayerVars& vars, const GatOptions& opts) {
    const std::size_t n = g.nodes().size();
    if (features.size() != n)
        throw DimensionError("layer_forward: feature count does not match node count");
    if (n == 0) return {};
    if (vars.dim != g.width())
        throw DimensionError("layer_forward: parameter width " + std::to_string(vars.dim) +
                             " does not match graph width " + std::to_string(g.width()));
    if (vars.heads == 0 || vars.dim % vars.heads != 0)
        throw ValidationError("layer_forward: head count must divide the width");
    if (opts.raw_form && vars.heads != 1)
        throw ValidationError("layer_forward: raw aggregation is single-head only");
    for (std::size_t i = 0; i < n; ++i) {
        const Matrix& f = t.value(features[i]);
        if (f.rows() != 1 || f.cols() != vars.dim)
            throw DimensionError("layer_forward: feature " + std::to_string(i) +
                                 " must be 1x" + std::to_string(vars.dim));
    }

    const std::size_t hw = vars.dim / vars.heads;
    LayerContext ctx(t, g, features, vars);
    std::vector<Var> out;
    out.reserve(n);

    for (std::size_t q = 0; q < n; ++q) {
        const Modality mq = g.nodes()[q].modality;
        std::map<Modality, std::vector<std::size_t>> self_loop;
        const auto* groups = &g.update_in(q);
        if (groups->empty()) {
            self_loop[mq] = {q};
            groups = &self_loop;
        }
        std::vector<Modality> channels;
        for (const auto& [m, srcs] : *groups) channels.push_back(m);

        std::vector<Var> head_outs;
        head_outs.reserve(vars.heads);
        for (std::size_t head = 0; head < vars.heads; ++head) {
            const Var proj_q_slice = ctx.head_slice(ctx.projection(q, mq), head * hw, hw);

            auto contribution = [&](std::size_t p, Modality m, Var alpha) {
                const Var weight = t.mul(alpha, ctx.gate(m));
                const Var base = opts.raw_form
                                     ? features[p]
                                     : ctx.head_slice(ctx.projection(p, m), head * hw, hw);
                return t.mul_scalar(base, weight);
            };

            Var acc;
            bool have_acc = false;
            auto push_term = [&](Var v) {
                acc = have_acc ? t.add(acc, v) : v;
                have_acc = true;
            };

            if (opts.neighbor_softmax) {
                for (const auto& [m, srcs] : *groups) {
                    std::vector<Var> scores;
                    scores.reserve(srcs.size());
                    for (std::size_t p : srcs)
                        scores.push_back(ctx.score(p, m, mq, proj_q_slice, head, hw));
                    const Var arow = t.softmax_rows(t.concat_cols(scores));
                    for (std::size_t j = 0; j < srcs.size(); ++j) {
                        const Var alpha = t.gather_entries(arow, {{0, j}});
                        push_term(contribution(srcs[j], m, alpha));
                    }
                }
            } else {
                for (const auto& [m, srcs] : *groups) {
                    std::size_t channel = 0;
                    while (channels[channel] != m) ++channel;
                    for (std::size_t p : srcs) {
                        std::vector<Var> scores;
                        scores.reserve(channels.size());
                        for (Modality mc : channels)
                            scores.push_back(ctx.score(p, mc, mq, proj_q_slice, head, hw));
                        const Var arow = t.softmax_rows(t.concat_cols(scores));
                        const Var alpha = t.gather_entries(arow, {{0, channel}});
                        push_term(contribution(p, m, alpha));
                    }
                }
            }
            head_outs.push_back(acc);
        }
        const Var pre = vars.heads == 1 ? head_outs[0] : t.concat_cols(head_outs);
        out.push_back(t.elu(pre));
    }
    return out;
}

std::vector<Matrix> layer_forward(const HeteroGraph& g, const GatLayerParams& params,
                                  const GatOptions& opts) {
    params.validate();
    Tape t;
    std::vector<Var> feats;
    feats.reserve(g.nodes().size());
    for (const GraphNode& node : g.nodes()) feats.push_back(t.constant(node.feature));
    const GatLayerVars vars = lift_params(t, params);
    std::vector<Matrix> out;
    for (Var v : layer_forward(t, g, feats, vars, opts)) out.push_back(t.value(v));
    return out;
}

std::vector<Var> stack_forward(Tape& t, const HeteroGraph& g, std::span<const Var> features,
                               const std::vector<GatLayerVars>& layers, const GatOptions& opts) {
    if (layers.empty()) throw ValidationError("stack_forward: at least one layer required");
    std::vector<Var> current(features.begin(), features.end());
    for (const GatLayerVars& layer : layers) current = layer_forward(t, g, current, layer, opts);
    return current;
}

std::vector<Matrix> stack_forward(const HeteroGraph& g, const std::vector<GatLayerParams>& layers,
                                  const GatOptions& opts) {
    if (layers.empty()) throw ValidationError("stack_forward: at least one layer required");
    Tape t;
    std::vector<Var> feats;
    feats.reserve(g.nodes().size());
    for (const GraphNode& node : g.nodes()) feats.push_back(t.constant(node.feature));
    std::vector<GatLayerVars> vars;
    vars.reserve(layers.size());
    for (const GatLayerParams& p : layers) vars.push_back(lift_params(t, p));
    std::vector<Matrix> out;
    for (Var v : stack_forward(t, g, feats, vars, opts)) out.push_back(t.value(v));
    return out;
}

double modal_attention(const Matrix& h_p, const Matrix& h_q, Modality m1, Modality m2,
                       const GatLayerParams& params) {
    params.validate();
    if (!params.w.count(m1) || !params.w.count(m2))
        throw ValidationError("modal_attention: unknown modality");
    if (h_p.rows() != 1 || h_p.cols() != params.dim || h_q.rows() != 1 ||
        h_q.cols() != params.dim)
        throw DimensionError("modal_attention: vectors must be 1x" + std::to_string(params.dim));

    Tape t;
    const Var vq = t.constant(h_q);
    const Var vp = t.constant(h_p);
    const Var proj_q = t.matmul(vq, t.constant(params.w.at(m2)));
    std::vector<Var> scores;
    std::size_t channel = 0;
    std::size_t m1_channel = 0;
    for (const auto& [m, wm] : params.w) {
        const auto ait = params.a.find({m, m2});
        if (ait == params.a.end())
            throw ValidationError(std::string("modal_attention: missing attention vector (") +
                                  modality_name(m) + " -> " + modality_name(m2) + ")");
        const Var proj_p = t.matmul(vp, t.constant(wm));
        const std::array<Var, 2> parts{proj_p, proj_q};
        const Var s = t.leaky_relu(dot(t, t.constant(ait->second), t.concat_cols(parts)),
                                   params.leaky_slope);
        scores.push_back(s);
        if (m == m1) m1_channel = channel;
        ++channel;
    }
    const Var alpha = t.softmax_rows(t.concat_cols(scores));
    return t.value(alpha)(0, m1_channel);
}

std::size_t GraphFeaturizer::dim() const { return words ? words->width() : 0; }

void GraphFeaturizer::validate() const {
    if (!words || !sections || !classes || !subclasses || !groups)
        throw ValidationError("graph featurizer: all five embedding tables are required");
    const std::size_t d = words->width();
    if (d == 0) throw ValidationError("graph featurizer: zero-width word table");
    const std::size_t sub = sections->width();
    if (classes->width() != sub || subclasses->width() != sub || groups->width() != sub)
        throw DimensionError("graph featurizer: code tables must share one width");
    if (sub * 4 != d)
        throw DimensionError("graph featurizer: code tables of width " + std::to_string(sub) +
                             " cannot tile word width " + std::to_string(d));
}

namespace {

Matrix record_embedding(const HeteroGraph& g, const std::vector<std::size_t>& text_nodes) {
    Matrix sum(1, g.width());
    for (std::size_t idx : text_nodes)
        sum = hgm::num::add(sum, g.nodes()[idx].feature);
    return hgm::num::scale(sum, 1.0 / static_cast<double>(text_nodes.size()));
}

}  // namespace

HeteroGraph build_graph(const std::vector<GraphRecord>& records,
                        const std::vector<std::pair<std::string, std::string>>& citations,
                        const GraphFeaturizer& featurizer, BuildReport* report) {
    featurizer.validate();
    HeteroGraph g;

    std::map<std::string, std::vector<std::size_t>> text_nodes_of;
    std::vector<std::string> record_order;
    for (const GraphRecord& r : records) {
        if (r.id.empty()) throw ValidationError("build_graph: empty record id");
        if (text_nodes_of.count(r.id))
            throw ValidationError("build_graph: duplicate record id '" + r.id + "'");
        text_nodes_of[r.id];
        record_order.push_back(r.id);
        for (std::size_t k = 0; k < r.sentences.size(); ++k) {
            const Matrix f = hgm::feat::embed_text_node(r.sentences[k], *featurizer.words);
            const std::size_t idx =
                g.add_node(r.id + "#s" + std::to_string(k), Modality::text, f);
            text_nodes_of[r.id].push_back(idx);
        }
    }

    for (const GraphRecord& r : records) {
        const auto& tn = text_nodes_of[r.id];
        for (std::size_t i = 0; i < tn.size(); ++i)
            for (std::size_t j = 0; j < tn.size(); ++j)
                if (i != j)
                    g.add_edge(g.nodes()[tn[i]].id, g.nodes()[tn[j]].id, EdgeKind::semantic);
    }

    for (const GraphRecord& r : records) {
        std::set<std::string> seen;
        for (const std::string& code : r.cpc_codes) {
            const hgm::feat::CpcCode parsed = hgm::feat::cpc_parse(code);
            const std::string node_id = "cpc:" + hgm::feat::cpc_render(parsed);
            if (!seen.insert(node_id).second) continue;
            if (!g.has_node(node_id)) {
                const Matrix f =
                    hgm::feat::cpc_embed(parsed, *featurizer.sections, *featurizer.classes,
                                         *featurizer.subclasses, *featurizer.groups);
                g.add_node(node_id, Modality::cpc, f);
            }
            for (std::size_t idx : text_nodes_of[r.id])
                g.add_edge(g.nodes()[idx].id, node_id, EdgeKind::hierarchy);
        }
    }

    std::map<std::string, std::vector<std::string>> resolved;
    for (const auto& [citing, cited] : citations) {
        if (!text_nodes_of.count(citing)) {
            if (report)
                report->warnings.push_back("citation row for unknown record '" + citing +
                                           "' skipped");
            continue;
        }
        if (!text_nodes_of.count(cited)) {
            if (report)
                report->warnings.push_back("citation of unknown record '" + cited +
                                           "' skipped (cited by '" + citing + "')");
            continue;
        }
        resolved[citing].push_back(cited);
    }

    if (!resolved.empty()) {
        std::vector<std::pair<std::string, std::vector<std::string>>> corpus;
        for (const GraphRecord& r : records) {
            std::vector<std::string> tokens;
            for (const auto& sentence : r.sentences)
                tokens.insert(tokens.end(), sentence.begin(), sentence.end());
            corpus.emplace_back(r.id, std::move(tokens));
        }
        const hgm::feat::TfIdfModel model = hgm::feat::TfIdfModel::fit(corpus);

        for (const std::string& citing : record_order) {
            const auto it = resolved.find(citing);
            if (it == resolved.end()) continue;
            std::vector<std::pair<std::string, Matrix>> cited;
            for (const std::string& cited_id : it->second) {
                if (text_nodes_of[cited_id].empty()) {
                    if (report)
                        report->warnings.push_back("citation of text-free record '" + cited_id +
                                                   "' skipped (cited by '" + citing + "')");
                    continue;
                }
                cited.emplace_back(cited_id, record_embedding(g, text_nodes_of[cited_id]));
            }
            if (cited.empty()) continue;
            const Matrix f = hgm::feat::cite_init(citing, cited, model, g.width());
            const std::string node_id = "cite:" + citing;
            g.add_node(node_id, Modality::cite, f);
            for (std::size_t idx : text_nodes_of[citing])
                g.add_edge(node_id, g.nodes()[idx].id, EdgeKind::citation);
        }
    }
    return g;
}

void export_graph(const HeteroGraph& g, std::ostream& out) {
    char buf[40];
    for (const GraphNode& node : g.nodes()) {
        out << node.id << '\t' << modality_name(node.modality) << '\t';
        for (std::size_t c = 0; c < node.feature.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", node.feature(0, c));
            if (c) out << ' ';
            out << buf;
        }
        out << '\n';
    }
    for (const GraphEdge& e : g.edges())
        out << g.nodes()[e.src].id << '\t' << g.nodes()[e.dst].id << '\t'
            << edge_kind_name(e.kind) << '\n';
}

}  // namespace hgm::mgat
