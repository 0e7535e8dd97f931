#include "hgm/hcl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hgm/numkit.hpp"

namespace hgm::hcl {

NegativeQueue::NegativeQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ValidationError("NegativeQueue: capacity must be positive");
}

void NegativeQueue::push(Matrix embedding) {
    if (embedding.rows() != 1)
        throw DimensionError("NegativeQueue: entries must be single rows");
    if (!items_.empty() && items_.front().cols() != embedding.cols())
        throw DimensionError("NegativeQueue: entry width mismatch");
    items_.push_back(std::move(embedding));
    while (items_.size() > capacity_) items_.pop_front();
}

PrototypeSet::PrototypeSet(double momentum) : momentum_(momentum) {
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ValidationError("PrototypeSet: momentum must lie in [0,1)");
}

void PrototypeSet::init(const std::string& category, Matrix prototype) {
    if (prototype.rows() != 1)
        throw DimensionError("PrototypeSet: prototypes must be single rows");
    prototypes_[category] = std::move(prototype);
}

const Matrix& PrototypeSet::prototype(const std::string& category) const {
    const auto it = prototypes_.find(category);
    if (it == prototypes_.end())
        throw ValidationError("PrototypeSet: unknown category: " + category);
    return it->second;
}

void PrototypeSet::ema_update(const std::string& category, const Matrix& member_mean) {
    const auto it = prototypes_.find(category);
    if (it == prototypes_.end())
        throw ValidationError("PrototypeSet: unknown category: " + category);
    hgm::num::require_same_shape(it->second, member_mean, "PrototypeSet::ema_update");
    for (std::size_t i = 0; i < member_mean.size(); ++i)
        it->second.data()[i] =
            momentum_ * it->second.data()[i] + (1.0 - momentum_) * member_mean.data()[i];
}

std::array<double, 3> LossWeights::realized() const {
    const Matrix probs = hgm::num::softmax_rows(
        Matrix(1, 3, std::vector<double>{w_alpha, w_beta, w_gamma}));
    return {probs(0, 0), probs(0, 1), probs(0, 2)};
}

std::vector<double> alignment_target(std::size_t k, std::size_t aligned_pos, double eps) {
    if (k == 0) throw ValidationError("alignment_target: no candidates");
    if (aligned_pos >= k) throw ValidationError("alignment_target: aligned index out of range");
    std::vector<double> q(k, eps);
    q[aligned_pos] = 1.0 - eps * static_cast<double>(k - 1);
    return q;
}

AlignmentPair make_alignment_pair(std::size_t anchor, std::size_t aligned, int label,
                                  std::size_t n_sentences, double eps) {
    if (label != 0 && label != 1)
        throw ValidationError("make_alignment_pair: label must be 0 or 1");
    if (anchor >= n_sentences || aligned >= n_sentences)
        throw ValidationError("make_alignment_pair: sentence index out of range");
    AlignmentPair pair;
    pair.anchor = anchor;
    pair.aligned = aligned;
    pair.label = label;
    pair.candidates.resize(n_sentences);
    for (std::size_t i = 0; i < n_sentences; ++i) pair.candidates[i] = i;
    pair.target = alignment_target(n_sentences, aligned, eps);
    return pair;
}

Lexicon load_lexicon(std::istream& in) {
    Lexicon lexicon;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw ParseError("lexicon line needs term<TAB>synonyms", lineno);
        const std::string term = line.substr(0, tab);
        std::vector<std::string> synonyms;
        std::stringstream rest(line.substr(tab + 1));
        std::string synonym;
        while (std::getline(rest, synonym, ',')) {
            if (synonym.empty())
                throw ParseError("lexicon line has an empty synonym", lineno);
            synonyms.push_back(synonym);
        }
        if (synonyms.empty())
            throw ParseError("lexicon line has no synonyms", lineno);
        lexicon[term] = std::move(synonyms);
    }
    return lexicon;
}

Lexicon load_lexicon_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open lexicon file: " + path);
    return load_lexicon(in);
}

std::vector<std::string> augment_mask(const std::vector<std::string>& tokens,
                                      const Lexicon& lexicon, double rate,
                                      hgm::num::Rng& rng, bool* warned) {
    if (!(rate >= 0.0 && rate <= 1.0))
        throw ValidationError("augment_mask: rate must lie in [0,1]");
    if (warned) *warned = false;
    if (lexicon.empty()) {
        if (warned) *warned = true;
        return tokens;
    }
    std::vector<std::size_t> coverable;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto it = lexicon.find(tokens[i]);
        if (it != lexicon.end() && !it->second.empty()) coverable.push_back(i);
    }
    const std::size_t count =
        static_cast<std::size_t>(std::ceil(rate * static_cast<double>(coverable.size())));
    std::vector<std::string> out = tokens;
    if (count == 0) return out;
    std::vector<std::size_t> picks = rng.sample_without_replacement(coverable.size(), count);
    std::sort(picks.begin(), picks.end());
    for (std::size_t pick : picks) {
        const std::size_t pos = coverable[pick];
        const auto& synonyms = lexicon.at(tokens[pos]);
        out[pos] = synonyms[rng.uniform_index(synonyms.size())];
    }
    return out;
}

Var loss_word(Tape& t, Var h_i, Var h_plus, const NegativeQueue& queue, Var tau,
              WordLossOptions options, bool* empty_queue) {
    const Matrix& tau_v = t.value(tau);
    if (tau_v.rows() != 1 || tau_v.cols() != 1)
        throw DimensionError("loss_word: tau must be 1x1");
    if (!(tau_v(0, 0) > 0.0)) throw ValidationError("loss_word: tau must be positive");
    if (empty_queue) *empty_queue = queue.empty();
    if (queue.empty() && options.literal_form)
        throw ValidationError("loss_word: literal form needs a nonempty queue");

    Var s_plus = hgm::num::cosine(t, h_i, h_plus);
    std::vector<Var> scores;
    if (!options.literal_form) scores.push_back(s_plus);
    for (std::size_t j = 0; j < queue.size(); ++j)
        scores.push_back(hgm::num::cosine(t, h_i, t.constant(queue.at(j))));

    Var row = t.concat_cols(scores);
    Var scaled = t.div_scalar(row, tau);
    Var lse = hgm::num::logsumexp_row(t, scaled);
    return t.sub(lse, t.div_scalar(s_plus, tau));
}

Var sent_sim_matrix(Tape& t, Var q, Var k) {
    const std::size_t dq = t.value(q).cols();
    const std::size_t dk = t.value(k).cols();
    if (dq != dk) throw DimensionError("sent_sim_matrix: Q and K widths differ");
    Var logits = t.scale(t.matmul(q, t.transpose(k)), 1.0 / std::sqrt(static_cast<double>(dq)));
    return t.softmax_rows(logits);
}

Matrix sent_sim_matrix(const Matrix& q, const Matrix& k) {
    Tape t;
    return t.value(sent_sim_matrix(t, t.constant(q), t.constant(k)));
}

Var loss_sentence(Tape& t, const std::vector<AlignmentPair>& pairs, Var attention) {
    if (pairs.empty()) throw ValidationError("loss_sentence: no alignment pairs");
    const Matrix& a = t.value(attention);
    std::vector<Var> terms;
    for (const AlignmentPair& pair : pairs) {
        if (pair.label == 0) continue;
        std::vector<std::size_t> candidates = pair.candidates;
        if (candidates.empty())
            for (std::size_t c = 0; c < a.cols(); ++c) candidates.push_back(c);
        if (pair.target.size() != candidates.size())
            throw ValidationError("loss_sentence: target/candidate size mismatch");
        double target_sum = 0.0;
        for (double v : pair.target) target_sum += v;
        if (std::abs(target_sum - 1.0) > 1e-9)
            throw ValidationError("loss_sentence: target distribution must sum to 1");
        if (pair.anchor >= a.rows())
            throw ValidationError("loss_sentence: anchor row out of range");
        std::vector<std::pair<std::size_t, std::size_t>> entries;
        for (std::size_t c : candidates) {
            if (c >= a.cols())
                throw ValidationError("loss_sentence: candidate column out of range");
            entries.emplace_back(pair.anchor, c);
        }
        Var p_raw = t.gather_entries(attention, entries);
        Var p = t.div_scalar(p_raw, t.sum(p_raw));
        Matrix q_m(1, pair.target.size(), pair.target);
        terms.push_back(hgm::num::kl_const_target(t, p, q_m, 1e-9));
    }
    const double inv_m = 1.0 / static_cast<double>(pairs.size());
    if (terms.empty()) return t.constant(Matrix(1, 1));
    Var total = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) total = t.add(total, terms[i]);
    return t.scale(total, inv_m);
}

PrototypeLossTerms loss_prototype(Tape& t, const std::map<std::string, Var>& prototypes,
                                  const std::map<std::string, std::vector<Var>>& members) {
    PrototypeLossTerms result{t.constant(Matrix(1, 1)), {}, {}};
    std::vector<Var> terms;
    for (const auto& [category, proto] : prototypes) {
        const auto it = members.find(category);
        if (it == members.end() || it->second.empty()) {
            result.skipped.push_back(category);
            continue;
        }
        Var stacked = it->second.size() == 1 ? it->second.front()
                                             : t.concat_rows(it->second);
        Var mean = t.mean_rows(stacked);
        result.member_means.emplace(category, t.value(mean));
        Var frozen = t.stop_gradient(proto);
        Var diff = t.sub(frozen, mean);
        terms.push_back(t.sum(t.mul(diff, diff)));
    }
    if (terms.empty()) return result;
    Var total = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) total = t.add(total, terms[i]);
    result.loss = total;
    return result;
}

Var loss_hcl(Tape& t, Var weights, Var loss_w, Var loss_s, Var loss_p) {
    const Matrix& w = t.value(weights);
    if (w.rows() != 1 || w.cols() != 3)
        throw DimensionError("loss_hcl: weights must be 1x3");
    Var realized = t.softmax_rows(weights);
    Var components = t.concat_cols(std::vector<Var>{loss_w, loss_s, loss_p});
    return t.sum(t.mul(realized, components));
}

LossReport loss_hcl(const LossWeights& weights, double loss_w, double loss_s, double loss_p) {
    if (!std::isfinite(loss_w)) throw NumericError("loss_hcl: word loss is non-finite");
    if (!std::isfinite(loss_s)) throw NumericError("loss_hcl: sentence loss is non-finite");
    if (!std::isfinite(loss_p)) throw NumericError("loss_hcl: prototype loss is non-finite");
    LossReport report;
    report.word_loss = loss_w;
    report.sentence_loss = loss_s;
    report.prototype_loss = loss_p;
    report.weights = weights.realized();
    report.total = report.weights[0] * loss_w + report.weights[1] * loss_s +
                   report.weights[2] * loss_p;
    return report;
}

}  // namespace hgm::hcl
