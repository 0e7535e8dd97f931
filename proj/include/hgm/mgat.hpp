#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hgm/features.hpp"
#include "hgm/matrix.hpp"
#include "hgm/rng.hpp"
#include "hgm/tape.hpp"

namespace hgm::mgat {

enum class Modality { text, cpc, cite };
enum class EdgeKind { semantic, hierarchy, citation };

const char* modality_name(Modality m);
const char* edge_kind_name(EdgeKind k);

struct GraphNode {
    std::string id;
    Modality modality = Modality::text;
    hgm::num::Matrix feature;  // 1 x d row
};

struct GraphEdge {
    std::size_t src = 0;
    std::size_t dst = 0;
    EdgeKind kind = EdgeKind::semantic;
};

// Heterogeneous patent graph. Stored edges keep their construction
// direction (semantic text->text, hierarchy text->cpc, citation cite->text);
// the update adjacency routes every modality into the text endpoint, so cpc
// and cite nodes are refreshed only through implicit self-loops.
class HeteroGraph {
public:
    std::size_t add_node(std::string id, Modality modality, hgm::num::Matrix feature);
    void add_edge(const std::string& src, const std::string& dst, EdgeKind kind);

    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    bool has_node(const std::string& id) const { return index_.count(id) > 0; }
    std::size_t index_of(const std::string& id) const;
    bool empty() const { return nodes_.empty(); }
    std::size_t width() const { return width_; }

    // In-neighbors whose features feed node q's update, grouped by source
    // modality, insertion-ordered within each group. Empty for cpc and cite
    // nodes, which receive a self-loop during the forward pass instead.
    const std::map<Modality, std::vector<std::size_t>>& update_in(std::size_t q) const;

private:
    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::map<Modality, std::vector<std::size_t>>> in_adj_;
    std::size_t width_ = 0;
};

// One attention layer's parameters. W acts on row features from the right
// (proj = h * W); attention vectors are stored full-width and sliced per
// head, each head reading columns [t*d/T, (t+1)*d/T) of both halves.
struct GatLayerParams {
    std::size_t dim = 0;
    std::size_t heads = 1;
    double leaky_slope = 0.2;
    std::map<Modality, hgm::num::Matrix> w;                          // d x d
    std::map<std::pair<Modality, Modality>, hgm::num::Matrix> a;     // 1 x 2d, key (src, dst)
    std::map<Modality, double> gate_raw;                             // gate = softplus(raw)

    static GatLayerParams init(std::size_t dim, std::size_t heads, hgm::num::Rng& rng);
    void validate() const;
};

struct GatOptions {
    // Default denominator varies the source modality channel for a fixed
    // node pair; this flag normalizes over neighbors within each modality
    // instead.
    bool neighbor_softmax = false;
    // Aggregate unprojected neighbor features (single-head only).
    bool raw_form = false;
};

// Attention coefficient for source modality m1 into an m2 destination,
// normalized across every source modality channel params carries.
double modal_attention(const hgm::num::Matrix& h_p, const hgm::num::Matrix& h_q, Modality m1,
                       Modality m2, const GatLayerParams& params);

// Tape handles for one layer's parameters, in flatten_params order.
struct GatLayerVars {
    std::size_t dim = 0;
    std::size_t heads = 1;
    double leaky_slope = 0.2;
    std::map<Modality, hgm::num::Var> w;
    std::map<std::pair<Modality, Modality>, hgm::num::Var> a;
    std::map<Modality, hgm::num::Var> gate_raw;  // 1 x 1
};

// Parameter matrices in a fixed order (projections, attention vectors,
// gates; map order within each group) so optimizers and gradient checks can
// address them positionally. Gates flatten to 1 x 1 matrices.
std::vector<hgm::num::Matrix> flatten_params(const GatLayerParams& params);

// Rebuilds layer handles from leaves laid out in flatten_params order,
// consuming exactly flatten_params(meta).size() entries from `slots`.
GatLayerVars assemble_params(const GatLayerParams& meta, std::span<const hgm::num::Var> slots);

GatLayerVars lift_params(hgm::num::Tape& t, const GatLayerParams& params);

std::vector<hgm::num::Var> layer_forward(hgm::num::Tape& t, const HeteroGraph& g,
                                         std::span<const hgm::num::Var> features,
                                         const GatLayerVars& vars, const GatOptions& opts = {});

std::vector<hgm::num::Matrix> layer_forward(const HeteroGraph& g, const GatLayerParams& params,
                                            const GatOptions& opts = {});

std::vector<hgm::num::Var> stack_forward(hgm::num::Tape& t, const HeteroGraph& g,
                                         std::span<const hgm::num::Var> features,
                                         const std::vector<GatLayerVars>& layers,
                                         const GatOptions& opts = {});

std::vector<hgm::num::Matrix> stack_forward(const HeteroGraph& g,
                                            const std::vector<GatLayerParams>& layers,
                                            const GatOptions& opts = {});

// One ingested patent record: tokenized sentences (a phrase pair
// contributes its anchor and target as one-sentence texts) plus the
// record's classification context.
struct GraphRecord {
    std::string id;
    std::vector<std::vector<std::string>> sentences;
    std::vector<std::string> cpc_codes;
};

// Embedding sources for node features. The word table fixes d; the four
// code tables must share width d/4.
struct GraphFeaturizer {
    const hgm::feat::EmbeddingTable* words = nullptr;
    const hgm::feat::EmbeddingTable* sections = nullptr;
    const hgm::feat::EmbeddingTable* classes = nullptr;
    const hgm::feat::EmbeddingTable* subclasses = nullptr;
    const hgm::feat::EmbeddingTable* groups = nullptr;

    std::size_t dim() const;
    void validate() const;
};

struct BuildReport {
    std::vector<std::string> warnings;
};

// Text node per sentence (id "<record>#s<k>"), deduplicated cpc node per
// canonical code (id "cpc:<code>"), and one cite node per record with at
// least one resolvable citation (id "cite:<record>"). Citation rows naming
// unknown records are skipped with a warning.
HeteroGraph build_graph(const std::vector<GraphRecord>& records,
                        const std::vector<std::pair<std::string, std::string>>& citations,
                        const GraphFeaturizer& featurizer, BuildReport* report = nullptr);

// One node per line `id<TAB>modality<TAB>floats`, one edge per line
// `src<TAB>dst<TAB>kind`, insertion order.
void export_graph(const HeteroGraph& g, std::ostream& out);

}  // namespace hgm::mgat
