#pragma once

#include <array>
#include <deque>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hgm/rng.hpp"
#include "hgm/tape.hpp"

namespace hgm::hcl {

using hgm::num::Matrix;
using hgm::num::Tape;
using hgm::num::Var;

// FIFO store of past embeddings used as in-batch negatives. Entries share
// one width, fixed by the first push. Callers must push the current positive
// pair only after its loss has been taken.
class NegativeQueue {
public:
    explicit NegativeQueue(std::size_t capacity = 64);

    void push(Matrix embedding);
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    std::size_t capacity() const { return capacity_; }
    const Matrix& at(std::size_t i) const { return items_.at(i); }

private:
    std::size_t capacity_;
    std::deque<Matrix> items_;
};

// Per-category prototype vectors updated by exponential moving average
// between steps; they enter the loss as frozen constants.
class PrototypeSet {
public:
    explicit PrototypeSet(double momentum = 0.9);

    double momentum() const { return momentum_; }
    void init(const std::string& category, Matrix prototype);
    bool has(const std::string& category) const { return prototypes_.count(category) > 0; }
    const Matrix& prototype(const std::string& category) const;
    const std::map<std::string, Matrix>& all() const { return prototypes_; }

    // mu <- momentum * mu + (1 - momentum) * member_mean, outside any tape.
    void ema_update(const std::string& category, const Matrix& member_mean);

private:
    double momentum_;
    std::map<std::string, Matrix> prototypes_;
};

// Unconstrained scalars realized as simplex weights through softmax.
struct LossWeights {
    double w_alpha = 0.0;
    double w_beta = 0.0;
    double w_gamma = 0.0;

    std::array<double, 3> realized() const;
};

// One annotated sentence-alignment judgment. `candidates` lists the columns
// of the attention matrix the pair is scored over (empty means all columns);
// `target` is the epsilon-smoothed one-hot distribution over candidates.
struct AlignmentPair {
    std::size_t anchor = 0;
    std::size_t aligned = 0;
    int label = 0;
    std::vector<std::size_t> candidates;
    std::vector<double> target;
};

// Epsilon-smoothed one-hot over k candidates; sums to exactly 1.
std::vector<double> alignment_target(std::size_t k, std::size_t aligned_pos,
                                     double eps = 1e-6);

AlignmentPair make_alignment_pair(std::size_t anchor, std::size_t aligned, int label,
                                  std::size_t n_sentences, double eps = 1e-6);

using Lexicon = std::map<std::string, std::vector<std::string>>;

// Lexicon file format: `term<TAB>synonym1,synonym2,...` per line.
Lexicon load_lexicon(std::istream& in);
Lexicon load_lexicon_file(const std::string& path);

// Replaces ceil(rate * coverable) lexicon-covered tokens with uniformly
// drawn synonyms; positions drawn without replacement. An empty lexicon
// returns the input unchanged and raises the warning flag.
std::vector<std::string> augment_mask(const std::vector<std::string>& tokens,
                                      const Lexicon& lexicon, double rate,
                                      hgm::num::Rng& rng, bool* warned = nullptr);

struct WordLossOptions {
    bool literal_form = false;
};

// Contrastive word-level loss. Standard form uses the full InfoNCE
// denominator (positive included); literal form keeps only the queued
// negatives in the denominator. tau must be a positive 1x1 Var; gradients
// reach h_i, h_plus and tau. An empty queue in standard form yields an
// exact zero loss and raises the flag.
Var loss_word(Tape& t, Var h_i, Var h_plus, const NegativeQueue& queue, Var tau,
              WordLossOptions options = {}, bool* empty_queue = nullptr);

// Row-stochastic sentence similarity, softmax(Q K^T / sqrt(d)).
Var sent_sim_matrix(Tape& t, Var q, Var k);
Matrix sent_sim_matrix(const Matrix& q, const Matrix& k);

// Mean over pairs of the indicator-gated KL between the renormalized
// attention row (restricted to the pair's candidates) and its target.
Var loss_sentence(Tape& t, const std::vector<AlignmentPair>& pairs, Var attention);

struct PrototypeLossTerms {
    Var loss;
    std::vector<std::string> skipped;            // categories with no members
    std::map<std::string, Matrix> member_means;  // for the EMA update afterwards
};

// Sum over categories of squared distance between the frozen prototype and
// the member mean. Prototypes pass through stop_gradient, so their leaves
// receive exactly zero gradient.
PrototypeLossTerms loss_prototype(Tape& t, const std::map<std::string, Var>& prototypes,
                                  const std::map<std::string, std::vector<Var>>& members);

// Softmax-weighted combination of the three level losses; weights is an
// unconstrained 1x3 Var.
Var loss_hcl(Tape& t, Var weights, Var loss_w, Var loss_s, Var loss_p);

// Value-level report used outside the tape.
struct LossReport {
    double word_loss = 0.0;
    double sentence_loss = 0.0;
    double prototype_loss = 0.0;
    std::array<double, 3> weights{};
    double total = 0.0;
};

LossReport loss_hcl(const LossWeights& weights, double loss_w, double loss_s, double loss_p);

}  // namespace hgm::hcl
