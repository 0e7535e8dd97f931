#include "hgm/msa.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>

#include "hgm/errors.hpp"

namespace hgm::msa {

namespace {

constexpr double kSentinel = -1e30;

// n * log2(n) with the log floored at 1 so single-unit levels stay finite.
double ratio_denominator(std::size_t n) {
    if (n == 0) return 1.0;
    const double log_n = std::log2(static_cast<double>(n));
    return static_cast<double>(n) * std::max(1.0, log_n);
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

double row_dot(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    double total = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) total += a(i, c) * b(j, c);
    return total;
}

double weight_at(const std::vector<double>& tfidf, std::size_t i) {
    return tfidf.empty() ? 0.0 : tfidf[i];
}

void validate_score_inputs(const Matrix& q, const Matrix& k, const SparsityPattern& pattern,
                           double lambda, const std::vector<double>& tfidf, const char* op) {
    const std::string name(op);
    pattern.validate(q.rows());
    if (k.rows() != q.rows())
        throw DimensionError(name + ": query and key row counts differ (" +
                             std::to_string(q.rows()) + " vs " + std::to_string(k.rows()) + ")");
    if (k.cols() != q.cols())
        throw DimensionError(name + ": query and key widths differ (" + std::to_string(q.cols()) +
                             " vs " + std::to_string(k.cols()) + ")");
    if (q.rows() > 0 && q.cols() == 0)
        throw DimensionError(name + ": feature width must be positive");
    if (lambda < 0.0) throw ValidationError(name + ": lambda must be nonnegative");
    if (!tfidf.empty() && tfidf.size() != q.rows())
        throw DimensionError(name + ": " + std::to_string(tfidf.size()) +
                             " statistical weights for " + std::to_string(q.rows()) + " positions");
}

Matrix pool_spans(const Matrix& x, const std::vector<Span>& spans) {
    Matrix pooled(spans.size(), x.cols());
    for (std::size_t u = 0; u < spans.size(); ++u) {
        const Span& span = spans[u];
        for (std::size_t r = span.start; r < span.end; ++r)
            for (std::size_t c = 0; c < x.cols(); ++c) pooled(u, c) += x(r, c);
        const double inv = 1.0 / static_cast<double>(span.end - span.start);
        for (std::size_t c = 0; c < x.cols(); ++c) pooled(u, c) *= inv;
    }
    return pooled;
}

std::vector<double> pool_weights(const std::vector<double>& values,
                                 const std::vector<Span>& spans) {
    std::vector<double> pooled(spans.size(), 0.0);
    for (std::size_t u = 0; u < spans.size(); ++u) {
        const Span& span = spans[u];
        double total = 0.0;
        for (std::size_t r = span.start; r < span.end; ++r) total += values[r];
        pooled[u] = total / static_cast<double>(span.end - span.start);
    }
    return pooled;
}

std::vector<Span> block_spans(std::size_t n, std::size_t width) {
    std::vector<Span> spans;
    for (std::size_t start = 0; start < n; start += width) {
        Span span;
        span.start = start;
        span.end = std::min(n, start + width);
        spans.push_back(span);
    }
    return spans;
}

}  // namespace

const char* level_name(Level level) {
    switch (level) {
        case Level::word: return "word";
        case Level::phrase: return "phrase";
        case Level::sentence: return "sentence";
        case Level::paragraph: return "paragraph";
    }
    return "unknown";
}

std::size_t log_window(std::size_t n) {
    return static_cast<std::size_t>(std::bit_width(n));
}

std::size_t SparsityPattern::pair_count() const {
    std::size_t total = 0;
    for (const auto& keys : allowed) total += keys.size();
    return total;
}

void SparsityPattern::validate(std::size_t n) const {
    if (allowed.size() != n)
        throw DimensionError("sparsity pattern covers " + std::to_string(allowed.size()) +
                             " queries, sequence has " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& keys = allowed[i];
        if (keys.empty())
            throw ValidationError("sparsity pattern: empty allowed set for query " +
                                  std::to_string(i));
        bool has_self = false;
        for (std::size_t a = 0; a < keys.size(); ++a) {
            if (keys[a] >= n)
                throw ValidationError("sparsity pattern: key " + std::to_string(keys[a]) +
                                      " out of range for length " + std::to_string(n));
            if (a > 0 && keys[a] <= keys[a - 1])
                throw ValidationError("sparsity pattern: allowed set for query " +
                                      std::to_string(i) + " is not strictly ascending");
            if (keys[a] == i) has_self = true;
        }
        if (!has_self)
            throw ValidationError("sparsity pattern: query " + std::to_string(i) +
                                  " does not attend itself");
    }
}

SparsityPattern window_pattern(std::size_t n, std::int64_t w, std::int64_t k, const Matrix& h,
                               Level level) {
    if (n < 1) throw ValidationError("window_pattern: sequence length must be at least 1");
    if (w < 0) throw ValidationError("window_pattern: window radius must be nonnegative");
    if (k < 0) throw ValidationError("window_pattern: global key count must be nonnegative");
    if (h.rows() != n)
        throw DimensionError("window_pattern: " + std::to_string(h.rows()) +
                             " feature rows for length " + std::to_string(n));

    SparsityPattern pattern;
    pattern.level = level;
    pattern.window = w;
    pattern.top_k = k;

    const std::size_t take = std::min(static_cast<std::size_t>(k), n);
    if (take > 0) {
        std::vector<double> mean(h.cols(), 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < h.cols(); ++c) mean[c] += h(r, c);
        for (double& v : mean) v /= static_cast<double>(n);

        std::vector<double> score(n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t c = 0; c < h.cols(); ++c) score[j] += h(j, c) * mean[c];

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (score[a] != score[b]) return score[a] > score[b];
            return a < b;
        });
        pattern.global_keys.assign(order.begin(), order.begin() + take);
        std::sort(pattern.global_keys.begin(), pattern.global_keys.end());
    }

    const std::size_t radius = std::min(static_cast<std::size_t>(w), n);
    pattern.allowed.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> keys = pattern.global_keys;
        const std::size_t lo = i >= radius ? i - radius : 0;
        const std::size_t hi = std::min(n - 1, i + radius);
        for (std::size_t j = lo; j <= hi; ++j) keys.push_back(j);
        pattern.allowed[i] = sorted_unique(std::move(keys));
    }
    return pattern;
}

SparsityPattern window_pattern(std::size_t n, const Matrix& h, Level level) {
    const auto size = static_cast<std::int64_t>(log_window(n));
    return window_pattern(n, size, size, h, level);
}

SparsityPattern group_pattern(const std::vector<std::size_t>& group_of, Level level) {
    SparsityPattern pattern;
    pattern.level = level;
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t j = 0; j < group_of.size(); ++j) members[group_of[j]].push_back(j);
    pattern.allowed.resize(group_of.size());
    for (std::size_t i = 0; i < group_of.size(); ++i) pattern.allowed[i] = members[group_of[i]];
    return pattern;
}

SparsityPattern dense_pattern(std::size_t n, Level level) {
    SparsityPattern pattern;
    pattern.level = level;
    pattern.window = n == 0 ? 0 : static_cast<std::int64_t>(n - 1);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    pattern.allowed.assign(n, all);
    return pattern;
}

PrototypeBank::PrototypeBank(Matrix prototypes) : prototypes_(std::move(prototypes)) {
    if (prototypes_.rows() == 0)
        throw ValidationError("prototype bank needs at least one prototype");
    if (prototypes_.cols() == 0)
        throw ValidationError("prototype bank needs a positive feature width");
}

PrototypeBank PrototypeBank::sample_from(const Matrix& h, std::size_t count, Rng& rng) {
    if (count == 0) throw ValidationError("prototype bank needs at least one prototype");
    if (count > h.rows())
        throw ValidationError("prototype sample of " + std::to_string(count) + " exceeds " +
                              std::to_string(h.rows()) + " positions");
    const auto picks = rng.sample_without_replacement(h.rows(), count);
    Matrix prototypes(count, h.cols());
    for (std::size_t k = 0; k < count; ++k)
        for (std::size_t c = 0; c < h.cols(); ++c) prototypes(k, c) = h(picks[k], c);
    PrototypeBank bank(std::move(prototypes));
    bank.assign(h);
    return bank;
}

void PrototypeBank::assign(const Matrix& h) {
    if (h.cols() != prototypes_.cols())
        throw DimensionError("prototype bank width " + std::to_string(prototypes_.cols()) +
                             " does not match feature width " + std::to_string(h.cols()));
    assignments_.resize(h.rows());
    for (std::size_t i = 0; i < h.rows(); ++i) {
        std::size_t best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < prototypes_.rows(); ++k) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < h.cols(); ++c) {
                const double diff = h(i, c) - prototypes_(k, c);
                d2 += diff * diff;
            }
            if (d2 < best_d2) {
                best_d2 = d2;
                best = k;
            }
        }
        assignments_[i] = best;
    }
}

void PrototypeBank::mean_step(const Matrix& h) {
    if (h.cols() != prototypes_.cols())
        throw DimensionError("prototype bank width " + std::to_string(prototypes_.cols()) +
                             " does not match feature width " + std::to_string(h.cols()));
    if (assignments_.size() != h.rows())
        throw ValidationError("prototype bank assignments are stale");
    Matrix sums(prototypes_.rows(), prototypes_.cols());
    std::vector<std::size_t> counts(prototypes_.rows(), 0);
    for (std::size_t i = 0; i < h.rows(); ++i) {
        const std::size_t k = assignments_[i];
        for (std::size_t c = 0; c < h.cols(); ++c) sums(k, c) += h(i, c);
        ++counts[k];
    }
    for (std::size_t k = 0; k < prototypes_.rows(); ++k) {
        if (counts[k] == 0) continue;
        const double inv = 1.0 / static_cast<double>(counts[k]);
        for (std::size_t c = 0; c < prototypes_.cols(); ++c)
            prototypes_(k, c) = sums(k, c) * inv;
    }
    ++updates_;
    assign(h);
}

SparsityPattern prototype_pattern(const Matrix& h, const PrototypeBank& bank, std::size_t fan_out,
                                  Level level) {
    const std::size_t count = bank.size();
    if (fan_out < 1 || fan_out > count)
        throw ValidationError("prototype fan-out must lie in [1, " + std::to_string(count) + "]");
    if (h.cols() != bank.prototypes().cols())
        throw DimensionError("prototype bank width " +
                             std::to_string(bank.prototypes().cols()) +
                             " does not match feature width " + std::to_string(h.cols()));
    if (bank.assignments().size() != h.rows())
        throw ValidationError("prototype bank assignments are stale");

    const std::size_t n = h.rows();
    std::vector<std::vector<std::size_t>> members(count);
    for (std::size_t j = 0; j < n; ++j) members[bank.assignments()[j]].push_back(j);

    SparsityPattern pattern;
    pattern.level = level;
    pattern.prototype_count = count;
    pattern.fan_out = fan_out;
    pattern.allowed.resize(n);

    const Matrix& prototypes = bank.prototypes();
    std::vector<std::pair<double, std::size_t>> ranked(count);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < count; ++k) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < h.cols(); ++c) {
                const double diff = h(i, c) - prototypes(k, c);
                d2 += diff * diff;
            }
            ranked[k] = {d2, k};
        }
        std::sort(ranked.begin(), ranked.end());
        std::vector<std::size_t> keys;
        for (std::size_t r = 0; r < fan_out; ++r) {
            const auto& cluster = members[ranked[r].second];
            keys.insert(keys.end(), cluster.begin(), cluster.end());
        }
        std::sort(keys.begin(), keys.end());
        pattern.allowed[i] = std::move(keys);
    }
    return pattern;
}

Matrix phrase_attention(const Matrix& phrases, const std::vector<std::size_t>& paragraph_of,
                        const Matrix& w_phrase, double tau) {
    if (tau <= 0.0) throw ValidationError("phrase_attention: temperature must be positive");
    if (paragraph_of.size() != phrases.rows())
        throw DimensionError("phrase_attention: grouping covers " +
                             std::to_string(paragraph_of.size()) + " phrases, features have " +
                             std::to_string(phrases.rows()));
    if (w_phrase.rows() != phrases.cols() || w_phrase.cols() != phrases.cols())
        throw DimensionError("phrase_attention: bilinear form is " +
                             std::to_string(w_phrase.rows()) + "x" +
                             std::to_string(w_phrase.cols()) + " for feature width " +
                             std::to_string(phrases.cols()));

    const std::size_t n = phrases.rows();
    std::map<std::size_t, std::vector<std::size_t>> members;
    for (std::size_t j = 0; j < n; ++j) members[paragraph_of[j]].push_back(j);

    const Matrix projected = num::matmul(phrases, w_phrase);
    Matrix out(n, n);
    std::vector<double> sims;
    for (std::size_t m = 0; m < n; ++m) {
        const auto& group = members[paragraph_of[m]];
        sims.assign(group.size(), 0.0);
        for (std::size_t a = 0; a < group.size(); ++a)
            sims[a] = row_dot(projected, m, phrases, group[a]) / tau;
        const double peak = *std::max_element(sims.begin(), sims.end());
        double total = 0.0;
        for (double& s : sims) {
            s = std::exp(s - peak);
            total += s;
        }
        for (std::size_t a = 0; a < group.size(); ++a) out(m, group[a]) = sims[a] / total;
    }
    return out;
}

Var phrase_attention(Tape& t, Var phrases, const std::vector<std::size_t>& paragraph_of,
                     Var w_phrase, double tau) {
    const Matrix& pv = t.value(phrases);
    const Matrix& wv = t.value(w_phrase);
    if (tau <= 0.0) throw ValidationError("phrase_attention: temperature must be positive");
    if (paragraph_of.size() != pv.rows())
        throw DimensionError("phrase_attention: grouping covers " +
                             std::to_string(paragraph_of.size()) + " phrases, features have " +
                             std::to_string(pv.rows()));
    if (wv.rows() != pv.cols() || wv.cols() != pv.cols())
        throw DimensionError("phrase_attention: bilinear form is " +
                             std::to_string(wv.rows()) + "x" +
                             std::to_string(wv.cols()) + " for feature width " +
                             std::to_string(pv.cols()));

    const std::size_t n = pv.rows();
    Matrix mask(n, n);
    Matrix sentinel(n, n, kSentinel);
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t j = 0; j < n; ++j) {
            if (paragraph_of[m] != paragraph_of[j]) continue;
            mask(m, j) = 1.0;
            sentinel(m, j) = 0.0;
        }
    }
    const Var sims =
        t.scale(t.matmul(t.matmul(phrases, w_phrase), t.transpose(phrases)), 1.0 / tau);
    return t.softmax_rows(t.add_constmat(t.mul_constmat(sims, std::move(mask)), std::move(sentinel)));
}

Matrix attn_scores(const Matrix& q, const Matrix& k, const SparsityPattern& pattern, double lambda,
                   const std::vector<double>& tfidf) {
    validate_score_inputs(q, k, pattern, lambda, tfidf, "attn_scores");
    const std::size_t n = q.rows();
    const double inv = n == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix out(n, n, kSentinel);
    for (std::size_t i = 0; i < n; ++i)
        for (const std::size_t j : pattern.allowed[i])
            out(i, j) = inv * row_dot(q, i, k, j) + lambda * weight_at(tfidf, i) * weight_at(tfidf, j);
    return out;
}

Var attn_scores(Tape& t, Var q, Var k, const SparsityPattern& pattern, Var lambda,
                const std::vector<double>& tfidf) {
    const Matrix& qv = t.value(q);
    const Matrix& kv = t.value(k);
    const Matrix& lv = t.value(lambda);
    if (lv.rows() != 1 || lv.cols() != 1)
        throw DimensionError("attn_scores: lambda must be 1x1");
    validate_score_inputs(qv, kv, pattern, lv(0, 0), tfidf, "attn_scores");

    const std::size_t n = qv.rows();
    Matrix mask(n, n);
    Matrix sentinel(n, n, kSentinel);
    Matrix outer(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const std::size_t j : pattern.allowed[i]) {
            mask(i, j) = 1.0;
            sentinel(i, j) = 0.0;
            outer(i, j) = weight_at(tfidf, i) * weight_at(tfidf, j);
        }
    }
    const double inv = n == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(qv.cols()));
    const Var raw = t.scale(t.matmul(q, t.transpose(k)), inv);
    const Var stat = t.mul_scalar(t.constant(std::move(outer)), lambda);
    return t.add_constmat(t.add(t.mul_constmat(raw, std::move(mask)), stat), std::move(sentinel));
}

Matrix sparse_attend(const Matrix& x, const SparsityPattern& pattern, double lambda,
                     const std::vector<double>& tfidf) {
    validate_score_inputs(x, x, pattern, lambda, tfidf, "sparse_attend");
    const std::size_t n = x.rows();
    const double inv = n == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(x.cols()));
    Matrix out(n, x.cols());
    std::vector<double> scores;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& keys = pattern.allowed[i];
        scores.assign(keys.size(), 0.0);
        for (std::size_t a = 0; a < keys.size(); ++a)
            scores[a] = inv * row_dot(x, i, x, keys[a]) +
                        lambda * weight_at(tfidf, i) * weight_at(tfidf, keys[a]);
        const double peak = *std::max_element(scores.begin(), scores.end());
        double total = 0.0;
        for (double& s : scores) {
            s = std::exp(s - peak);
            total += s;
        }
        for (std::size_t a = 0; a < keys.size(); ++a) {
            const double weight = scores[a] / total;
            for (std::size_t c = 0; c < x.cols(); ++c) out(i, c) += weight * x(keys[a], c);
        }
    }
    return out;
}

std::pair<Matrix, ComplexityReport> sparse_forward(const Matrix& h,
                                                   const std::vector<MsaLevel>& levels,
                                                   double lambda) {
    if (lambda < 0.0) throw ValidationError("sparse_forward: lambda must be nonnegative");
    const std::size_t n = h.rows();
    Matrix x = h;
    ComplexityReport report;
    for (const MsaLevel& level : levels) {
        const std::size_t units = level.spans.size();
        std::size_t cursor = 0;
        for (const Span& span : level.spans) {
            if (span.start >= span.end || span.end > n || span.start < cursor)
                throw ValidationError(
                    "sparse_forward: level spans must be ascending, disjoint and nonempty");
            cursor = span.end;
        }
        level.pattern.validate(units);
        if (!level.tfidf.empty() && level.tfidf.size() != units)
            throw DimensionError("sparse_forward: " + std::to_string(level.tfidf.size()) +
                                 " statistical weights for " + std::to_string(units) + " units");
        const bool word_level = level.pattern.level == Level::word;
        if (word_level) {
            bool identity = units == n;
            for (std::size_t u = 0; identity && u < units; ++u)
                identity = level.spans[u].start == u && level.spans[u].end == u + 1;
            if (!identity)
                throw ValidationError("sparse_forward: a word level needs one span per token");
        }

        const auto started = std::chrono::steady_clock::now();
        const Matrix pooled = pool_spans(x, level.spans);
        Matrix y = sparse_attend(pooled, level.pattern, lambda, level.tfidf);
        if (word_level) {
            x = std::move(y);
        } else {
            for (std::size_t u = 0; u < units; ++u)
                for (std::size_t r = level.spans[u].start; r < level.spans[u].end; ++r)
                    for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) += y(u, c);
        }
        const auto finished = std::chrono::steady_clock::now();
        const double wall_ms =
            std::chrono::duration<double, std::milli>(finished - started).count();

        LevelCost cost;
        cost.level = level.pattern.level;
        cost.units = units;
        cost.pairs = level.pattern.pair_count();
        cost.pairs_per_nlogn = static_cast<double>(cost.pairs) / ratio_denominator(units);
        cost.wall_ms = wall_ms;
        report.total_pairs += cost.pairs;
        report.total_wall_ms += wall_ms;
        report.levels.push_back(std::move(cost));
    }
    return {std::move(x), std::move(report)};
}

std::vector<SweepRow> complexity_sweep(const std::vector<std::size_t>& ns,
                                       const SweepConfig& config,
                                       std::vector<ComplexityReport>* reports) {
    std::vector<SweepRow> rows;
    rows.reserve(ns.size());
    if (reports) reports->clear();
    for (const std::size_t n : ns) {
        if (n < 2)
            throw ValidationError("complexity_sweep: sequence lengths must be at least 2");
        Rng rng(config.seed + n);
        const Matrix h = Matrix::uniform(n, config.dim, rng, -1.0, 1.0);
        std::vector<double> tfidf(n, 0.0);
        for (double& v : tfidf) v = rng.uniform();

        std::vector<MsaLevel> levels;
        {
            MsaLevel word;
            word.spans = block_spans(n, 1);
            word.pattern = config.dense
                               ? window_pattern(n, static_cast<std::int64_t>(n) - 1, 0, h)
                               : window_pattern(n, h);
            word.tfidf = tfidf;
            levels.push_back(std::move(word));
        }
        if (!config.dense) {
            const auto phrase_spans = block_spans(n, 3);
            if (phrase_spans.size() >= 2) {
                MsaLevel phrase;
                std::vector<std::size_t> paragraph_of(phrase_spans.size(), 0);
                for (std::size_t u = 0; u < phrase_spans.size(); ++u)
                    paragraph_of[u] = phrase_spans[u].start / 27;
                phrase.pattern = group_pattern(paragraph_of, Level::phrase);
                phrase.tfidf = pool_weights(tfidf, phrase_spans);
                phrase.spans = phrase_spans;
                levels.push_back(std::move(phrase));
            }
            const auto sentence_spans = block_spans(n, 9);
            if (sentence_spans.size() >= 2) {
                MsaLevel sentence;
                const Matrix pooled = pool_spans(h, sentence_spans);
                const auto count = static_cast<std::size_t>(
                    std::ceil(std::sqrt(static_cast<double>(sentence_spans.size()))));
                const PrototypeBank bank = PrototypeBank::sample_from(pooled, count, rng);
                sentence.pattern = prototype_pattern(pooled, bank, 1, Level::sentence);
                sentence.tfidf = pool_weights(tfidf, sentence_spans);
                sentence.spans = sentence_spans;
                levels.push_back(std::move(sentence));
            }
            const auto paragraph_spans = block_spans(n, 27);
            if (paragraph_spans.size() >= 2) {
                MsaLevel paragraph;
                paragraph.pattern = dense_pattern(paragraph_spans.size(), Level::paragraph);
                paragraph.tfidf = pool_weights(tfidf, paragraph_spans);
                paragraph.spans = paragraph_spans;
                levels.push_back(std::move(paragraph));
            }
        }

        const auto [out, report] = sparse_forward(h, levels, config.lambda);
        (void)out;
        SweepRow row;
        row.n = n;
        row.pairs = report.total_pairs;
        row.pairs_per_nlogn = static_cast<double>(report.total_pairs) / ratio_denominator(n);
        row.dense_pairs = n * n;
        row.wall_ms = report.total_wall_ms;
        rows.push_back(row);
        if (reports) reports->push_back(report);
    }
    return rows;
}

void dump_pattern(const SparsityPattern& pattern, std::ostream& out) {
    for (std::size_t i = 0; i < pattern.allowed.size(); ++i) {
        out << i << ':';
        for (const std::size_t j : pattern.allowed[i]) out << ' ' << j;
        out << '\n';
    }
}

namespace {

std::string format_double(const char* fmt, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, value);
    return buf;
}

}  // namespace

void write_complexity_csv(const ComplexityReport& report, std::ostream& out) {
    out << "level,n,pairs,pairs_per_nlogn,wall_ms\n";
    for (const LevelCost& cost : report.levels) {
        out << level_name(cost.level) << ',' << cost.units << ',' << cost.pairs << ','
            << format_double("%.6g", cost.pairs_per_nlogn) << ','
            << format_double("%.3f", cost.wall_ms) << '\n';
    }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "n,pairs,pairs_per_nlogn,dense_pairs,wall_ms\n";
    for (const SweepRow& row : rows) {
        out << row.n << ',' << row.pairs << ',' << format_double("%.6g", row.pairs_per_nlogn)
            << ',' << row.dense_pairs << ',' << format_double("%.3f", row.wall_ms) << '\n';
    }
}

}  // namespace hgm::msa
