#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "hgm/matrix.hpp"
#include "hgm/rng.hpp"
#include "hgm/tape.hpp"
#include "hgm/textseg.hpp"

namespace hgm::msa {

using num::Matrix;
using num::Rng;
using num::Tape;
using num::Var;
using text::Level;
using text::Span;

const char* level_name(Level level);

// Smallest t with 2^t >= n+1; the default window radius and global-key count.
std::size_t log_window(std::size_t n);

// Per-query sets of permitted key indices. Every set is sorted, duplicate-free
// and contains the query itself. global_keys is one set shared by all queries.
struct SparsityPattern {
    Level level = Level::word;
    std::vector<std::vector<std::size_t>> allowed;
    std::vector<std::size_t> global_keys;
    std::int64_t window = 0;
    std::int64_t top_k = 0;
    std::size_t prototype_count = 0;
    std::size_t fan_out = 0;

    std::size_t size() const { return allowed.size(); }
    std::size_t pair_count() const;
    void validate(std::size_t n) const;
};

// Band of radius w around each query plus k globally shared key positions,
// picked by dot-product similarity with the mean feature row (ties toward the
// lower index). h must have n rows. The two-argument form uses log-sized
// defaults for both w and k.
SparsityPattern window_pattern(std::size_t n, std::int64_t w, std::int64_t k, const Matrix& h,
                               Level level = Level::word);
SparsityPattern window_pattern(std::size_t n, const Matrix& h, Level level = Level::word);

// Each unit attends every unit in the same group.
SparsityPattern group_pattern(const std::vector<std::size_t>& group_of,
                              Level level = Level::phrase);

SparsityPattern dense_pattern(std::size_t n, Level level = Level::paragraph);

// K reference rows plus the nearest-prototype assignment of each position.
// Distances are Euclidean; the lowest prototype index wins ties.
class PrototypeBank {
public:
    explicit PrototypeBank(Matrix prototypes);

    // K distinct rows of h drawn without replacement, assignments included.
    static PrototypeBank sample_from(const Matrix& h, std::size_t count, Rng& rng);

    void assign(const Matrix& h);

    // One k-means mean update from the current assignments, then re-assign.
    // Clusters with no members keep their previous vector.
    void mean_step(const Matrix& h);

    const Matrix& prototypes() const { return prototypes_; }
    const std::vector<std::size_t>& assignments() const { return assignments_; }
    std::size_t size() const { return prototypes_.rows(); }
    std::size_t updates() const { return updates_; }

private:
    Matrix prototypes_;
    std::vector<std::size_t> assignments_;
    std::size_t updates_ = 0;
};

// Position i attends every position assigned to one of the fan_out prototypes
// nearest to h_i. Bank assignments must be current for h.
SparsityPattern prototype_pattern(const Matrix& h, const PrototypeBank& bank, std::size_t fan_out,
                                  Level level = Level::sentence);

// Row-stochastic weights over phrases sharing a paragraph, from the bilinear
// similarity h_m W h_n^T at temperature tau. Cross-paragraph entries are
// exactly zero.
Matrix phrase_attention(const Matrix& phrases, const std::vector<std::size_t>& paragraph_of,
                        const Matrix& w_phrase, double tau);
Var phrase_attention(Tape& t, Var phrases, const std::vector<std::size_t>& paragraph_of,
                     Var w_phrase, double tau);

// Scaled dot-product scores plus lambda times the product of the two
// positions' statistical weights, on allowed pairs only; disallowed pairs
// carry a -1e30 sentinel so a later row softmax drives them to exact zero.
Var attn_scores(Tape& t, Var q, Var k, const SparsityPattern& pattern, Var lambda,
                const std::vector<double>& tfidf);
Matrix attn_scores(const Matrix& q, const Matrix& k, const SparsityPattern& pattern, double lambda,
                   const std::vector<double>& tfidf);

// Self-attention of x restricted to the pattern: per-row softmax over the
// allowed keys, then the weighted sum of their rows. An empty tfidf vector
// means all-zero weights.
Matrix sparse_attend(const Matrix& x, const SparsityPattern& pattern, double lambda,
                     const std::vector<double>& tfidf);

struct LevelCost {
    Level level = Level::word;
    std::size_t units = 0;
    std::size_t pairs = 0;
    double pairs_per_nlogn = 0.0;
    double wall_ms = 0.0;
};

struct ComplexityReport {
    std::vector<LevelCost> levels;
    std::size_t total_pairs = 0;
    double total_wall_ms = 0.0;
};

// One granularity of the composed forward pass: token spans defining the
// units, the sparsity pattern over those units, and per-unit statistical
// weights (empty means all-zero).
struct MsaLevel {
    std::vector<Span> spans;
    SparsityPattern pattern;
    std::vector<double> tfidf;
};

// Runs the levels in order on the token features. A word level must use one
// span per token and replaces the running representation with its attention
// output; coarser levels mean-pool the running rows over each span, attend at
// that granularity and add the result back to every row of the span.
std::pair<Matrix, ComplexityReport> sparse_forward(const Matrix& h,
                                                   const std::vector<MsaLevel>& levels,
                                                   double lambda);

struct SweepConfig {
    std::size_t dim = 16;
    std::uint64_t seed = 1;
    double lambda = 0.1;
    bool dense = false;  // single all-pairs word level instead of the stack
};

struct SweepRow {
    std::size_t n = 0;
    std::size_t pairs = 0;
    double pairs_per_nlogn = 0.0;
    std::size_t dense_pairs = 0;
    double wall_ms = 0.0;
};

// Synthetic-feature cost sweep. Each n gets a fresh seeded feature matrix and
// the default level stack (word window, phrases of 3 tokens grouped by
// paragraphs of 27, sentences of 9 tokens under sqrt-sized prototypes,
// dense paragraphs); levels that collapse to a single unit are dropped.
// When given, `reports` receives the per-n level breakdown.
std::vector<SweepRow> complexity_sweep(const std::vector<std::size_t>& ns,
                                       const SweepConfig& config = {},
                                       std::vector<ComplexityReport>* reports = nullptr);

void dump_pattern(const SparsityPattern& pattern, std::ostream& out);
void write_complexity_csv(const ComplexityReport& report, std::ostream& out);
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace hgm::msa
