#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hgm/features.hpp"
#include "hgm/hcl.hpp"
#include "hgm/matrix.hpp"
#include "hgm/msa.hpp"

namespace hgm::run {

using num::Matrix;

// One labeled phrase pair: a benchmark phrase, a comparison phrase, the
// classification context they were judged under, and a similarity score.
struct PhrasePairRecord {
    std::string id;
    std::string anchor;
    std::string target;
    std::string context_raw;
    feat::CpcCode context;
    double score = 0.0;
};

struct IngestReport {
    std::vector<PhrasePairRecord> records;
    std::vector<std::string> skipped;  // "line N: reason", one per dropped row
    std::size_t rows_seen = 0;         // data rows, header excluded
};

// CSV with a header naming id, anchor, target, context, score in any order;
// extra columns are ignored. Quoted fields may hold commas, doubled quotes
// and newlines. Malformed rows are skipped and reported, a missing required
// column is fatal.
IngestReport ingest_csv(std::istream& in);
IngestReport ingest_csv_file(const std::string& path);

struct ScoreHistogram {
    std::vector<double> edges;          // bucket b covers [edges[b], edges[b+1])
    std::vector<std::size_t> counts;    // the last bucket also takes score 1.0
    std::vector<double> percentages;
    std::size_t zero_count = 0;         // exact zeros, also present in bucket 0
    double zero_share = 0.0;            // percent
    std::size_t total = 0;
};

ScoreHistogram score_histogram(const std::vector<PhrasePairRecord>& records, double width = 0.05);

// Word-token frequencies over anchors and targets, count descending, then
// term ascending.
std::vector<std::pair<std::string, std::size_t>> top_terms(
    const std::vector<PhrasePairRecord>& records, std::size_t limit = 20);

std::map<char, std::size_t> section_counts(const std::vector<PhrasePairRecord>& records);

void write_histogram_csv(const ScoreHistogram& h, std::ostream& out);
void write_terms_csv(const std::vector<std::pair<std::string, std::size_t>>& terms,
                     std::ostream& out);
void write_sections_csv(const std::map<char, std::size_t>& sections, std::ostream& out);

std::string histogram_table(const ScoreHistogram& h);
std::string terms_table(const std::vector<std::pair<std::string, std::size_t>>& terms);
std::string sections_table(const std::map<char, std::size_t>& sections);

struct TrainConfig {
    bool use_hcl = true;
    bool use_mgat = true;
    bool use_msa = true;
    std::size_t steps = 200;
    double lr = 0.05;
    double eta = 0.1;     // weight of the contrastive term next to the MSE
    double lambda = 0.1;  // statistical-weight coupling, kept nonnegative
    std::size_t dim = 16;
    std::uint64_t seed = 1;
};

// `key = value` lines, '#' comments; unknown keys are fatal.
TrainConfig load_train_config(std::istream& in);
TrainConfig load_train_config_file(const std::string& path);

// Insertion-ordered named tensors.
class ParamStore {
public:
    void add(std::string name, Matrix value);
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    const Matrix& at(const std::string& name) const;
    Matrix& at(const std::string& name);
    const std::vector<std::pair<std::string, Matrix>>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<std::pair<std::string, Matrix>> entries_;
    std::map<std::string, std::size_t> index_;
};

// Text artifact: format tag, config echo, vocabulary string sections and
// named tensors at 17 significant digits, so save then load is the identity
// on every double.
struct Checkpoint {
    TrainConfig config;
    ParamStore params;
    std::map<std::string, std::vector<std::string>> vocab;
};

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint_file(const std::string& path);

struct CurvePoint {
    std::size_t step = 0;
    double total = 0.0;
    double mse = 0.0;
    double hcl = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<CurvePoint> curve;
    bool diverged = false;
    std::size_t steps_run = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

// Full-batch gradient descent on MSE plus eta times the weighted three-level
// contrastive loss. Fully deterministic per (seed, config, data). On a
// non-finite loss the run aborts and the last finite parameters are kept.
TrainResult train(const std::vector<PhrasePairRecord>& records, const TrainConfig& config,
                  const hcl::Lexicon& lexicon = {});

void write_curve_csv(const TrainResult& result, std::ostream& out);

// Deterministic similarity in [0,1] for one phrase pair under a trained
// checkpoint; (1 + cosine of the pooled representations) / 2.
double score_pair(const Checkpoint& ckpt, const std::string& anchor, const std::string& target,
                  const std::string& context);

// Word and number tokens of a text, normalized surfaces in order.
std::vector<std::string> content_tokens(const std::string& text);

struct GraphExportReport {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::vector<std::string> warnings;
};

// Builds the heterogeneous graph over the records (anchor and target as
// one-sentence texts, the context as the classification code) plus any
// resolvable citations, and writes its node/edge listing.
GraphExportReport export_pair_graph(
    const std::vector<PhrasePairRecord>& records,
    const std::vector<std::pair<std::string, std::string>>& citations, std::size_t dim,
    std::uint64_t seed, std::ostream& out);

struct BenchResult {
    std::vector<msa::SweepRow> rows;                 // wall_ms is the median
    std::vector<msa::ComplexityReport> reports;      // level breakdown per n
};

// complexity_sweep repeated `repeats` times, keeping the median wall time.
BenchResult bench(const std::vector<std::size_t>& ns, const msa::SweepConfig& config,
                  std::size_t repeats = 5);

void write_bench_complexity_csv(const BenchResult& result, const std::vector<std::size_t>& ns,
                                std::ostream& out);

}  // namespace hgm::run
