#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hgm/errors.hpp"
#include "hgm/features.hpp"
#include "hgm/hcl.hpp"
#include "hgm/msa.hpp"
#include "hgm/run.hpp"

namespace {

void usage(std::ostream& out) {
    out << "usage: hgmnet <verb> [flags]\n"
           "  ingest --data pairs.csv\n"
           "  stats  --data pairs.csv [--out dir]\n"
           "  train  --data pairs.csv [--config file] [--seed n] [--lexicon tsv] [--out dir]\n"
           "  score  <checkpoint> <anchor> <target> <context>\n"
           "  bench  [--seed n] [--out dir]\n"
           "  graph  --data pairs.csv [--citations tsv] [--seed n] [--out dir]\n";
}

struct Args {
    std::string verb;
    std::map<std::string, std::string> flags;
    std::vector<std::string> positionals;
};

Args parse_args(int argc, char** argv) {
    static const std::set<std::string> known = {"--seed",      "--config", "--out",
                                                "--data",      "--citations", "--lexicon"};
    Args args;
    args.verb = argv[1];
    for (int i = 2; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg.rfind("--", 0) == 0) {
            if (!known.count(arg)) throw hgm::ValidationError("unknown flag: " + arg);
            if (i + 1 >= argc) throw hgm::ValidationError("flag " + arg + " needs a value");
            args.flags[arg.substr(2)] = argv[++i];
        } else {
            args.positionals.push_back(arg);
        }
    }
    return args;
}

std::string require_flag(const Args& args, const std::string& name) {
    const auto it = args.flags.find(name);
    if (it == args.flags.end())
        throw hgm::ValidationError(args.verb + " requires --" + name);
    return it->second;
}

std::uint64_t parse_seed(const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long seed = std::stoull(value, &used);
        if (used != value.size()) throw hgm::ValidationError("bad --seed: " + value);
        return seed;
    } catch (const hgm::ValidationError&) {
        throw;
    } catch (const std::exception&) {
        throw hgm::ValidationError("bad --seed: " + value);
    }
}

std::string out_path(const Args& args, const std::string& file) {
    const auto it = args.flags.find("out");
    const std::string dir = it == args.flags.end() ? std::string(".") : it->second;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw hgm::IoError("cannot create directory " + dir);
    return dir + "/" + file;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw hgm::IoError("cannot write " + path);
    writer(out);
    out.flush();
    if (!out) throw hgm::IoError("cannot write " + path);
}

hgm::run::IngestReport ingest_with_summary(const Args& args) {
    const std::string data = require_flag(args, "data");
    hgm::run::IngestReport report = hgm::run::ingest_csv_file(data);
    std::cout << "ingested " << report.records.size() << " records from " << report.rows_seen
              << " rows (" << report.skipped.size() << " skipped)\n";
    for (const std::string& reason : report.skipped) std::cout << "  skipped " << reason << '\n';
    return report;
}

int run_ingest(const Args& args) {
    ingest_with_summary(args);
    return 0;
}

int run_stats(const Args& args) {
    const auto report = ingest_with_summary(args);
    const auto histogram = hgm::run::score_histogram(report.records);
    const auto terms = hgm::run::top_terms(report.records);
    const auto sections = hgm::run::section_counts(report.records);

    std::cout << '\n' << hgm::run::histogram_table(histogram);
    std::cout << '\n' << hgm::run::terms_table(terms);
    std::cout << '\n' << hgm::run::sections_table(sections);

    const std::string histogram_path = out_path(args, "histogram.csv");
    const std::string terms_path = out_path(args, "terms.csv");
    const std::string contexts_path = out_path(args, "contexts.csv");
    write_file(histogram_path,
               [&](std::ostream& out) { hgm::run::write_histogram_csv(histogram, out); });
    write_file(terms_path, [&](std::ostream& out) { hgm::run::write_terms_csv(terms, out); });
    write_file(contexts_path,
               [&](std::ostream& out) { hgm::run::write_sections_csv(sections, out); });
    std::cout << "\nwrote " << histogram_path << ", " << terms_path << ", " << contexts_path
              << '\n';
    return 0;
}

int run_train(const Args& args) {
    hgm::run::TrainConfig config;
    if (args.flags.count("config"))
        config = hgm::run::load_train_config_file(args.flags.at("config"));
    if (args.flags.count("seed")) config.seed = parse_seed(args.flags.at("seed"));
    hgm::hcl::Lexicon lexicon;
    if (args.flags.count("lexicon"))
        lexicon = hgm::hcl::load_lexicon_file(args.flags.at("lexicon"));

    const auto report = ingest_with_summary(args);
    const hgm::run::TrainResult result = hgm::run::train(report.records, config, lexicon);

    const std::string ckpt_path = out_path(args, "checkpoint.txt");
    const std::string curve_path = out_path(args, "curve.csv");
    hgm::run::save_checkpoint_file(result.checkpoint, ckpt_path);
    write_file(curve_path, [&](std::ostream& out) { hgm::run::write_curve_csv(result, out); });

    char initial[32], final_loss[32];
    std::snprintf(initial, sizeof initial, "%.6g", result.initial_loss);
    std::snprintf(final_loss, sizeof final_loss, "%.6g", result.final_loss);
    std::cout << "trained " << result.steps_run << " steps; total loss " << initial << " -> "
              << final_loss << '\n';
    if (result.diverged)
        std::cout << "diverged; checkpoint keeps the last finite parameters\n";
    std::cout << "wrote " << ckpt_path << " and " << curve_path << '\n';
    return 0;
}

int run_score(const Args& args) {
    if (args.positionals.size() != 4)
        throw hgm::ValidationError("score needs: checkpoint anchor target context");
    const hgm::run::Checkpoint ckpt = hgm::run::load_checkpoint_file(args.positionals[0]);
    const double value = hgm::run::score_pair(ckpt, args.positionals[1], args.positionals[2],
                                              args.positionals[3]);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    std::cout << buf << '\n';
    return 0;
}

int run_bench(const Args& args) {
    hgm::msa::SweepConfig config;
    if (args.flags.count("seed")) config.seed = parse_seed(args.flags.at("seed"));
    const std::vector<std::size_t> ns = {64, 128, 256, 512, 1024, 2048, 4096};
    const hgm::run::BenchResult result = hgm::run::bench(ns, config);

    const std::string sweep_path = out_path(args, "sweep.csv");
    const std::string complexity_path = out_path(args, "complexity.csv");
    write_file(sweep_path,
               [&](std::ostream& out) { hgm::msa::write_sweep_csv(result.rows, out); });
    write_file(complexity_path, [&](std::ostream& out) {
        hgm::run::write_bench_complexity_csv(result, ns, out);
    });

    std::cout << "      n      pairs    ratio      dense    wall_ms\n";
    for (const hgm::msa::SweepRow& row : result.rows) {
        char line[128];
        std::snprintf(line, sizeof line, "%7zu %10zu %8.3f %10zu %10.3f\n", row.n, row.pairs,
                      row.pairs_per_nlogn, row.dense_pairs, row.wall_ms);
        std::cout << line;
    }
    std::cout << "wrote " << sweep_path << " and " << complexity_path << '\n';
    return 0;
}

int run_graph(const Args& args) {
    const auto report = ingest_with_summary(args);
    std::vector<std::pair<std::string, std::string>> citations;
    if (args.flags.count("citations"))
        citations = hgm::feat::load_citations_file(args.flags.at("citations"));
    const std::uint64_t seed =
        args.flags.count("seed") ? parse_seed(args.flags.at("seed")) : 1;

    const std::string graph_path = out_path(args, "graph.tsv");
    hgm::run::GraphExportReport graph_report;
    write_file(graph_path, [&](std::ostream& out) {
        graph_report = hgm::run::export_pair_graph(report.records, citations, 16, seed, out);
    });
    std::cout << "graph: " << graph_report.nodes << " nodes, " << graph_report.edges
              << " edges\n";
    for (const std::string& warning : graph_report.warnings)
        std::cout << "  warning: " << warning << '\n';
    std::cout << "wrote " << graph_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        usage(std::cerr);
        return 1;
    }
    try {
        const Args args = parse_args(argc, argv);
        if (args.verb == "ingest") return run_ingest(args);
        if (args.verb == "stats") return run_stats(args);
        if (args.verb == "train") return run_train(args);
        if (args.verb == "score") return run_score(args);
        if (args.verb == "bench") return run_bench(args);
        if (args.verb == "graph") return run_graph(args);
        usage(std::cerr);
        throw hgm::ValidationError("unknown verb: " + args.verb);
    } catch (const hgm::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
