#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hgm/gradcheck.hpp"
#include "hgm/mgat.hpp"

using namespace hgm::mgat;
using hgm::num::Matrix;
using hgm::num::Rng;
using hgm::num::Tape;
using hgm::num::Var;

namespace {

const double kUnitGateRaw = std::log(std::exp(1.0) - 1.0);

HeteroGraph fixture_graph() {
    HeteroGraph g;
    g.add_node("t0", Modality::text, Matrix::row({1.0, 0.0}));
    g.add_node("c0", Modality::cpc, Matrix::row({0.0, 1.0}));
    g.add_node("t1", Modality::text, Matrix::row({1.0, 1.0}));
    g.add_edge("t0", "t1", EdgeKind::semantic);
    g.add_edge("t1", "t0", EdgeKind::semantic);
    g.add_edge("t0", "c0", EdgeKind::hierarchy);
    g.add_edge("t1", "c0", EdgeKind::hierarchy);
    return g;
}

GatLayerParams fixture_params() {
    GatLayerParams p;
    p.dim = 2;
    p.heads = 1;
    p.w[Modality::text] = Matrix(2, 2, std::vector<double>{0.6, -0.2, 0.1, 0.3});
    p.w[Modality::cpc] = Matrix(2, 2, std::vector<double>{0.2, 0.4, -0.3, 0.5});
    p.a[{Modality::text, Modality::text}] = Matrix::row({0.3, -0.1, 0.2, 0.4});
    p.a[{Modality::cpc, Modality::text}] = Matrix::row({-0.2, 0.5, 0.1, -0.3});
    p.a[{Modality::cpc, Modality::cpc}] = Matrix::row({0.2, 0.0, -0.1, 0.3});
    p.gate_raw[Modality::text] = kUnitGateRaw;
    p.gate_raw[Modality::cpc] = 0.0;
    return p;
}

GraphRecord make_record(std::string id, std::vector<std::vector<std::string>> sentences,
                        std::vector<std::string> codes) {
    GraphRecord r;
    r.id = std::move(id);
    r.sentences = std::move(sentences);
    r.cpc_codes = std::move(codes);
    return r;
}

hgm::feat::EmbeddingTable make_table(std::vector<std::string> vocab, std::size_t width,
                                     std::uint64_t seed) {
    Rng rng(seed);
    return hgm::feat::EmbeddingTable(vocab, width, rng);
}

struct Featurizer {
    hgm::feat::EmbeddingTable words, sections, classes, subclasses, groups;

    explicit Featurizer(std::uint64_t seed, std::size_t dim = 8)
        : words(make_table({"sensor", "probe", "housing", "valve", "seal", "pump"}, dim, seed)),
          sections(make_table({"A", "B"}, dim / 4, seed + 1)),
          classes(make_table({"01", "47"}, dim / 4, seed + 2)),
          subclasses(make_table({"B", ""}, dim / 4, seed + 3)),
          groups(make_table({"0", "1"}, dim / 4, seed + 4)) {}

    GraphFeaturizer view() const { return {&words, &sections, &classes, &subclasses, &groups}; }
};

}  // namespace

TEST_SUITE("mgat") {

TEST_CASE("graph construction validates ids, widths and edge shapes") {
    HeteroGraph g;
    g.add_node("a", Modality::text, Matrix::row({1.0, 2.0}));
    CHECK_THROWS_AS(g.add_node("a", Modality::text, Matrix::row({0.0, 0.0})),
                    hgm::ValidationError);
    CHECK_THROWS_AS(g.add_node("b", Modality::text, Matrix::row({1.0})), hgm::DimensionError);
    g.add_node("c", Modality::cpc, Matrix::row({0.0, 1.0}));
    CHECK_THROWS_AS(g.add_edge("a", "missing", EdgeKind::semantic), hgm::ValidationError);
    CHECK_THROWS_AS(g.add_edge("a", "c", EdgeKind::semantic), hgm::ValidationError);
    CHECK_THROWS_AS(g.add_edge("c", "a", EdgeKind::hierarchy), hgm::ValidationError);
    g.add_edge("a", "c", EdgeKind::hierarchy);
    CHECK(g.edges().size() == 1);
}

TEST_CASE("hierarchy and citation edges feed the text endpoint") {
    HeteroGraph g;
    g.add_node("t", Modality::text, Matrix::row({1.0}));
    g.add_node("c", Modality::cpc, Matrix::row({2.0}));
    g.add_node("r", Modality::cite, Matrix::row({3.0}));
    g.add_edge("t", "c", EdgeKind::hierarchy);
    g.add_edge("r", "t", EdgeKind::citation);
    const auto& in_t = g.update_in(g.index_of("t"));
    REQUIRE(in_t.size() == 2);
    CHECK(in_t.at(Modality::cpc) == std::vector<std::size_t>{g.index_of("c")});
    CHECK(in_t.at(Modality::cite) == std::vector<std::size_t>{g.index_of("r")});
    CHECK(g.update_in(g.index_of("c")).empty());
    CHECK(g.update_in(g.index_of("r")).empty());
}

TEST_CASE("uniform scores over three modalities split evenly") {
    Rng rng(7);
    GatLayerParams p = GatLayerParams::init(4, 1, rng);
    const Matrix shared_w = Matrix::uniform(4, 4, rng, -0.5, 0.5);
    const Matrix shared_a = Matrix::uniform(1, 8, rng, -0.5, 0.5);
    for (Modality m : {Modality::text, Modality::cpc, Modality::cite}) {
        p.w[m] = shared_w;
        p.a[{m, Modality::text}] = shared_a;
    }
    const Matrix h_p = Matrix::uniform(1, 4, rng, -1, 1);
    const Matrix h_q = Matrix::uniform(1, 4, rng, -1, 1);
    for (Modality m : {Modality::text, Modality::cpc, Modality::cite})
        CHECK(modal_attention(h_p, h_q, m, Modality::text, p) ==
              doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("a single modality channel gets full weight") {
    GatLayerParams p;
    p.dim = 2;
    p.w[Modality::text] = Matrix::identity(2);
    p.a[{Modality::text, Modality::text}] = Matrix::row({0.4, -0.2, 0.3, 0.1});
    p.gate_raw[Modality::text] = kUnitGateRaw;
    CHECK(modal_attention(Matrix::row({0.5, 1.0}), Matrix::row({-1.0, 2.0}), Modality::text,
                          Modality::text, p) == 1.0);
}

TEST_CASE("two-channel attention reproduces the hand softmax") {
    // Post-activation scores 0 and ln 3 give weights 1/4 and 3/4.
    GatLayerParams p;
    p.dim = 1;
    p.w[Modality::text] = Matrix::identity(1);
    p.w[Modality::cpc] = Matrix::identity(1);
    p.a[{Modality::text, Modality::text}] = Matrix::row({0.0, 0.0});
    p.a[{Modality::cpc, Modality::text}] = Matrix::row({std::log(3.0), 0.0});
    p.gate_raw[Modality::text] = kUnitGateRaw;
    p.gate_raw[Modality::cpc] = kUnitGateRaw;
    const Matrix one = Matrix::row({1.0});
    CHECK(modal_attention(one, one, Modality::text, Modality::text, p) ==
          doctest::Approx(0.25).epsilon(1e-14));
    CHECK(modal_attention(one, one, Modality::cpc, Modality::text, p) ==
          doctest::Approx(0.75).epsilon(1e-14));
    CHECK_THROWS_AS(modal_attention(one, one, Modality::cite, Modality::text, p),
                    hgm::ValidationError);
}

TEST_CASE("attention channels sum to one for any pair") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        GatLayerParams p = GatLayerParams::init(6, 1, rng);
        const Matrix h_p = Matrix::uniform(1, 6, rng, -2, 2);
        const Matrix h_q = Matrix::uniform(1, 6, rng, -2, 2);
        for (Modality mq : {Modality::text, Modality::cpc, Modality::cite}) {
            double sum = 0.0;
            for (Modality m : {Modality::text, Modality::cpc, Modality::cite})
                sum += modal_attention(h_p, h_q, m, mq, p);
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("single in-neighbor passes through an identity layer") {
    HeteroGraph g;
    g.add_node("p", Modality::text, Matrix::row({0.7, 0.2}));
    g.add_node("q", Modality::text, Matrix::row({0.1, 0.4}));
    g.add_edge("p", "q", EdgeKind::semantic);

    GatLayerParams params;
    params.dim = 2;
    params.w[Modality::text] = Matrix::identity(2);
    params.a[{Modality::text, Modality::text}] = Matrix::row({0.2, 0.1, -0.3, 0.4});
    params.gate_raw[Modality::text] = kUnitGateRaw;

    const auto out = layer_forward(g, params);
    CHECK(out[1](0, 0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(out[1](0, 1) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("two identical neighbors match one under neighbor softmax") {
    GatLayerParams params;
    params.dim = 2;
    params.w[Modality::text] = Matrix(2, 2, std::vector<double>{0.5, 0.1, -0.2, 0.8});
    params.a[{Modality::text, Modality::text}] = Matrix::row({0.2, 0.1, -0.3, 0.4});
    params.gate_raw[Modality::text] = 0.35;

    HeteroGraph one;
    one.add_node("p", Modality::text, Matrix::row({0.7, 0.2}));
    one.add_node("q", Modality::text, Matrix::row({0.1, 0.4}));
    one.add_edge("p", "q", EdgeKind::semantic);

    HeteroGraph two;
    two.add_node("p1", Modality::text, Matrix::row({0.7, 0.2}));
    two.add_node("p2", Modality::text, Matrix::row({0.7, 0.2}));
    two.add_node("q", Modality::text, Matrix::row({0.1, 0.4}));
    two.add_edge("p1", "q", EdgeKind::semantic);
    two.add_edge("p2", "q", EdgeKind::semantic);

    const GatOptions opts{.neighbor_softmax = true};
    const auto out_one = layer_forward(one, params, opts);
    const auto out_two = layer_forward(two, params, opts);
    CHECK(out_two[2](0, 0) == doctest::Approx(out_one[1](0, 0)).epsilon(1e-14));
    CHECK(out_two[2](0, 1) == doctest::Approx(out_one[1](0, 1)).epsilon(1e-14));

    // The default per-pair normalization gives each copy full weight instead.
    const auto summed = layer_forward(two, params);
    CHECK(summed[2](0, 0) > out_two[2](0, 0));
}

TEST_CASE("layer and stack outputs match the committed fixture") {
    const HeteroGraph g = fixture_graph();
    const GatLayerParams params = fixture_params();
    const auto l1 = layer_forward(g, params);
    const auto l2 = stack_forward(g, {params, params});

    std::ifstream golden("data/gat_fixture.golden");
    REQUIRE(golden.good());
    std::string layer, id, line;
    std::size_t checked = 0;
    while (std::getline(golden, line)) {
        std::istringstream row(line);
        REQUIRE(std::getline(row, layer, '\t'));
        REQUIRE(std::getline(row, id, '\t'));
        const auto& outs = layer == "layer1" ? l1 : l2;
        const Matrix& got = outs[g.index_of(id)];
        for (std::size_t c = 0; c < got.cols(); ++c) {
            double expected = 0.0;
            const bool parsed = static_cast<bool>(row >> expected);
            REQUIRE(parsed);
            CHECK(got(0, c) == doctest::Approx(expected).epsilon(1e-12));
        }
        ++checked;
    }
    CHECK(checked == 6);
}

TEST_CASE("isolated nodes fall back to a gated self-projection") {
    HeteroGraph g;
    g.add_node("c", Modality::cpc, Matrix::row({0.0, 1.0}));
    GatLayerParams params = fixture_params();
    const auto out = layer_forward(g, params);
    // softplus(0) * [-0.3, 0.5] through the elu.
    const double gate = std::log(2.0);
    CHECK(out[0](0, 0) == doctest::Approx(std::expm1(-0.3 * gate)).epsilon(1e-14));
    CHECK(out[0](0, 1) == doctest::Approx(0.5 * gate).epsilon(1e-14));
}

TEST_CASE("one layer of stack_forward equals layer_forward") {
    const HeteroGraph g = fixture_graph();
    const GatLayerParams params = fixture_params();
    const auto direct = layer_forward(g, params);
    const auto stacked = stack_forward(g, {params});
    REQUIRE(direct.size() == stacked.size());
    for (std::size_t i = 0; i < direct.size(); ++i) CHECK(direct[i] == stacked[i]);
}

TEST_CASE("identity second layer applies the nonlinearity twice") {
    HeteroGraph g;
    g.add_node("t", Modality::text, Matrix::row({-0.4, 0.9}));
    GatLayerParams first;
    first.dim = 2;
    first.w[Modality::text] = Matrix(2, 2, std::vector<double>{0.7, -0.5, 0.2, 0.6});
    first.a[{Modality::text, Modality::text}] = Matrix::row({0.1, 0.2, 0.3, 0.4});
    first.gate_raw[Modality::text] = kUnitGateRaw;
    GatLayerParams second = first;
    second.w[Modality::text] = Matrix::identity(2);

    const auto once = layer_forward(g, first);
    const auto twice = stack_forward(g, {first, second});
    auto elu = [](double x) { return x >= 0 ? x : std::expm1(x); };
    const double gate = std::log(1.0 + std::exp(kUnitGateRaw));
    CHECK(twice[0](0, 0) == doctest::Approx(elu(gate * once[0](0, 0))).epsilon(1e-12));
    CHECK(twice[0](0, 1) == doctest::Approx(elu(gate * once[0](0, 1))).epsilon(1e-12));
}

TEST_CASE("stack_forward rejects empty stacks and width drift") {
    const HeteroGraph g = fixture_graph();
    CHECK_THROWS_AS(stack_forward(g, {}), hgm::ValidationError);
    Rng rng(13);
    GatLayerParams wide = GatLayerParams::init(4, 1, rng);
    CHECK_THROWS_AS(stack_forward(g, {fixture_params(), wide}), hgm::DimensionError);
}

TEST_CASE("output width stays d for every dividing head count") {
    Rng rng(17);
    HeteroGraph g;
    g.add_node("t0", Modality::text, Matrix::uniform(1, 12, rng, -1, 1));
    g.add_node("t1", Modality::text, Matrix::uniform(1, 12, rng, -1, 1));
    g.add_node("c", Modality::cpc, Matrix::uniform(1, 12, rng, -1, 1));
    g.add_edge("t0", "t1", EdgeKind::semantic);
    g.add_edge("t1", "t0", EdgeKind::semantic);
    g.add_edge("t0", "c", EdgeKind::hierarchy);
    for (std::size_t heads : {1, 2, 3, 4, 6, 12}) {
        const GatLayerParams p = GatLayerParams::init(12, heads, rng);
        const auto out = layer_forward(g, p);
        for (const Matrix& row : out) {
            CHECK(row.rows() == 1);
            CHECK(row.cols() == 12);
        }
    }
    CHECK_THROWS_AS(GatLayerParams::init(12, 5, rng), hgm::ValidationError);
}

TEST_CASE("raw aggregation requires a single head") {
    Rng rng(19);
    const HeteroGraph g = fixture_graph();
    const GatLayerParams p2 = GatLayerParams::init(2, 2, rng);
    CHECK_THROWS_AS(layer_forward(g, p2, GatOptions{.raw_form = true}), hgm::ValidationError);

    // With identity projections the raw and projected forms coincide.
    GatLayerParams p = fixture_params();
    p.w[Modality::text] = Matrix::identity(2);
    p.w[Modality::cpc] = Matrix::identity(2);
    const auto raw = layer_forward(g, p, GatOptions{.raw_form = true});
    const auto projected = layer_forward(g, p);
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(raw[i] == projected[i]);
}

TEST_CASE("zero features and zero parameters give zero outputs") {
    HeteroGraph g;
    g.add_node("t0", Modality::text, Matrix(1, 4));
    g.add_node("t1", Modality::text, Matrix(1, 4));
    g.add_node("c", Modality::cpc, Matrix(1, 4));
    g.add_edge("t0", "t1", EdgeKind::semantic);
    g.add_edge("t1", "t0", EdgeKind::semantic);
    g.add_edge("t0", "c", EdgeKind::hierarchy);
    GatLayerParams p;
    p.dim = 4;
    for (Modality m : {Modality::text, Modality::cpc}) {
        p.w[m] = Matrix(4, 4);
        p.gate_raw[m] = kUnitGateRaw;
        for (Modality mq : {Modality::text, Modality::cpc}) p.a[{m, mq}] = Matrix(1, 8);
    }
    for (const Matrix& row : layer_forward(g, p))
        for (double v : row.data()) CHECK(v == 0.0);
}

TEST_CASE("renaming node ids leaves outputs bitwise identical") {
    HeteroGraph a = fixture_graph();
    HeteroGraph b;
    b.add_node("north", Modality::text, Matrix::row({1.0, 0.0}));
    b.add_node("middle", Modality::cpc, Matrix::row({0.0, 1.0}));
    b.add_node("south", Modality::text, Matrix::row({1.0, 1.0}));
    b.add_edge("north", "south", EdgeKind::semantic);
    b.add_edge("south", "north", EdgeKind::semantic);
    b.add_edge("north", "middle", EdgeKind::hierarchy);
    b.add_edge("south", "middle", EdgeKind::hierarchy);
    const GatLayerParams params = fixture_params();
    const auto out_a = layer_forward(a, params);
    const auto out_b = layer_forward(b, params);
    for (std::size_t i = 0; i < out_a.size(); ++i) CHECK(out_a[i] == out_b[i]);
}

TEST_CASE("permuting insertion order permutes outputs") {
    HeteroGraph a = fixture_graph();
    HeteroGraph b;
    b.add_node("t1", Modality::text, Matrix::row({1.0, 1.0}));
    b.add_node("t0", Modality::text, Matrix::row({1.0, 0.0}));
    b.add_node("c0", Modality::cpc, Matrix::row({0.0, 1.0}));
    b.add_edge("t1", "t0", EdgeKind::semantic);
    b.add_edge("t0", "t1", EdgeKind::semantic);
    b.add_edge("t1", "c0", EdgeKind::hierarchy);
    b.add_edge("t0", "c0", EdgeKind::hierarchy);
    const GatLayerParams params = fixture_params();
    const auto out_a = layer_forward(a, params);
    const auto out_b = layer_forward(b, params);
    for (const char* id : {"t0", "c0", "t1"}) {
        const Matrix& ra = out_a[a.index_of(id)];
        const Matrix& rb = out_b[b.index_of(id)];
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(ra(0, c) == doctest::Approx(rb(0, c)).epsilon(1e-12));
    }
}

TEST_CASE("missing modality parameters are reported") {
    HeteroGraph g = fixture_graph();
    GatLayerParams p = fixture_params();
    p.w.erase(Modality::cpc);
    p.a.erase({Modality::cpc, Modality::text});
    p.a.erase({Modality::cpc, Modality::cpc});
    CHECK_THROWS_AS(layer_forward(g, p), hgm::ValidationError);
}

TEST_CASE("flatten and assemble round-trip layer parameters") {
    Rng rng(23);
    const GatLayerParams p = GatLayerParams::init(4, 2, rng);
    const auto flat = flatten_params(p);
    CHECK(flat.size() == 3 + 9 + 3);
    Tape t;
    std::vector<Var> slots;
    for (const Matrix& m : flat) slots.push_back(t.leaf(m));
    const GatLayerVars vars = assemble_params(p, slots);
    CHECK(t.value(vars.w.at(Modality::text)) == p.w.at(Modality::text));
    CHECK(t.value(vars.a.at({Modality::cite, Modality::cpc})) ==
          p.a.at({Modality::cite, Modality::cpc}));
    CHECK(t.value(vars.gate_raw.at(Modality::cite))(0, 0) ==
          p.gate_raw.at(Modality::cite));
    CHECK_THROWS_AS(assemble_params(p, std::span<const Var>(slots.data(), 5)),
                    hgm::ValidationError);
}

TEST_CASE("build_graph assembles nodes and edges per record") {
    Featurizer f(31);
    const std::vector<GraphRecord> records{
        make_record("P1", {{"sensor", "probe"}, {"housing"}}, {"A01B1/00"})};
    BuildReport report;
    const HeteroGraph g = build_graph(records, {}, f.view(), &report);
    CHECK(report.warnings.empty());
    REQUIRE(g.nodes().size() == 3);
    CHECK(g.has_node("P1#s0"));
    CHECK(g.has_node("P1#s1"));
    CHECK(g.has_node("cpc:A01B1"));
    std::size_t semantic = 0, hierarchy = 0;
    for (const GraphEdge& e : g.edges()) {
        semantic += e.kind == EdgeKind::semantic;
        hierarchy += e.kind == EdgeKind::hierarchy;
    }
    CHECK(semantic == 2);
    CHECK(hierarchy == 2);

    const Matrix expected =
        hgm::feat::embed_text_node({"sensor", "probe"}, f.words);
    CHECK(g.nodes()[g.index_of("P1#s0")].feature == expected);
}

TEST_CASE("records sharing a code share one cpc node") {
    Featurizer f(37);
    const std::vector<GraphRecord> records{
        make_record("P1", {{"sensor"}}, {"A47"}),
        make_record("P2", {{"valve"}}, {"A47"})};
    const HeteroGraph g = build_graph(records, {}, f.view());
    std::size_t cpc_nodes = 0;
    for (const GraphNode& n : g.nodes()) cpc_nodes += n.modality == Modality::cpc;
    CHECK(cpc_nodes == 1);
    CHECK(g.has_node("cpc:A47"));
}

TEST_CASE("empty record list builds an empty graph") {
    Featurizer f(41);
    const HeteroGraph g = build_graph({}, {}, f.view());
    CHECK(g.empty());
    CHECK(g.edges().empty());
}

TEST_CASE("citations add a cite node and skip dangling rows") {
    Featurizer f(43);
    const std::vector<GraphRecord> records{
        make_record("P1", {{"sensor", "probe"}}, {"A47"}),
        make_record("P2", {{"sensor", "valve"}}, {"B01"})};
    const std::vector<std::pair<std::string, std::string>> citations{
        {"P1", "P2"}, {"P1", "GHOST"}, {"NOBODY", "P2"}};
    BuildReport report;
    const HeteroGraph g = build_graph(records, citations, f.view(), &report);
    CHECK(report.warnings.size() == 2);
    REQUIRE(g.has_node("cite:P1"));
    CHECK_FALSE(g.has_node("cite:P2"));
    std::size_t citation_edges = 0;
    for (const GraphEdge& e : g.edges()) citation_edges += e.kind == EdgeKind::citation;
    CHECK(citation_edges == 1);

    // Weighted by the tf-idf cosine between the two records.
    hgm::feat::TfIdfModel model = hgm::feat::TfIdfModel::fit(
        {{"P1", {"sensor", "probe"}}, {"P2", {"sensor", "valve"}}});
    const Matrix cited_embed = hgm::feat::embed_text_node({"sensor", "valve"}, f.words);
    const Matrix expected = hgm::num::scale(cited_embed, model.cosine("P1", "P2"));
    const Matrix& got = g.nodes()[g.index_of("cite:P1")].feature;
    for (std::size_t c = 0; c < got.cols(); ++c)
        CHECK(got(0, c) == doctest::Approx(expected(0, c)).epsilon(1e-12));
}

TEST_CASE("build_graph rejects duplicate record ids") {
    Featurizer f(47);
    const std::vector<GraphRecord> records{make_record("P1", {{"sensor"}}, {}),
                                           make_record("P1", {{"valve"}}, {})};
    CHECK_THROWS_AS(build_graph(records, {}, f.view()), hgm::ValidationError);
}

TEST_CASE("featurizer validation catches missing and misfit tables") {
    Featurizer f(53);
    GraphFeaturizer view = f.view();
    view.groups = nullptr;
    CHECK_THROWS_AS(build_graph({}, {}, view), hgm::ValidationError);
    Rng rng(54);
    hgm::feat::EmbeddingTable wide({"x"}, 3, rng);
    view = f.view();
    view.groups = &wide;
    CHECK_THROWS_AS(build_graph({}, {}, view), hgm::DimensionError);
}

TEST_CASE("export lists nodes then edges in insertion order") {
    HeteroGraph g;
    g.add_node("t", Modality::text, Matrix::row({0.5, -1.0}));
    g.add_node("c", Modality::cpc, Matrix::row({0.25, 0.0}));
    g.add_edge("t", "c", EdgeKind::hierarchy);
    std::ostringstream out;
    export_graph(g, out);
    CHECK(out.str() ==
          "t\ttext\t0.5 -1\n"
          "c\tcpc\t0.25 0\n"
          "t\tc\thierarchy\n");
}

TEST_CASE("six-node pipeline passes the gradient check") {
    Featurizer f(61, 4);
    const std::vector<GraphRecord> records{
        make_record("P1", {{"sensor", "probe"}, {"housing"}}, {"A47"}),
        make_record("P2", {{"valve"}, {"pump", "seal"}}, {"A47"})};
    const std::vector<std::pair<std::string, std::string>> citations{{"P1", "P2"}};
    const HeteroGraph g = build_graph(records, citations, f.view());
    REQUIRE(g.nodes().size() == 6);

    for (std::uint64_t seed : {71, 72, 73, 74, 75}) {
        Rng rng(seed);
        const GatLayerParams meta1 = GatLayerParams::init(4, 2, rng);
        const GatLayerParams meta2 = GatLayerParams::init(4, 1, rng);
        const std::size_t per_layer = flatten_params(meta1).size();

        std::vector<Matrix> params;
        for (const GraphNode& node : g.nodes()) params.push_back(node.feature);
        for (const Matrix& m : flatten_params(meta1)) params.push_back(m);
        for (const Matrix& m : flatten_params(meta2)) params.push_back(m);

        auto build = [&](Tape& tp, std::span<const Var> p) {
            const std::span<const Var> feats = p.subspan(0, 6);
            const std::vector<GatLayerVars> layers{
                assemble_params(meta1, p.subspan(6, per_layer)),
                assemble_params(meta2, p.subspan(6 + per_layer, per_layer))};
            const auto outs = stack_forward(tp, g, feats, layers);
            return tp.sum(tp.concat_rows(outs));
        };
        CHECK(hgm::num::grad_check(build, params) < 1e-4);
    }
}

}  // TEST_SUITE
