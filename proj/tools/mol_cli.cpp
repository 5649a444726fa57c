// Command-line front end: workload generation, benchmarking, single queries,
// matrix decomposition, and the self-check battery.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "mol/bench.hpp"
#include "mol/decompose.hpp"
#include "mol/io.hpp"
#include "mol/verify.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

mol::GatingFunction parse_gate_string(const std::string& text) {
  if (text == "uniform") return mol::UniformGate{};
  if (text == "argmax" || text == "argmax_one_hot") return mol::ArgmaxOneHotGate{};
  if (text.rfind("softmax:", 0) == 0) {
    return mol::SoftmaxDotsGate{std::stod(text.substr(8))};
  }
  throw mol::ArgumentError("unknown gate '" + text +
                           "' (expected uniform, argmax, or softmax:<t>)");
}

mol::GatingFunction parse_gate_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "uniform") return mol::UniformGate{};
  if (type == "argmax_one_hot") return mol::ArgmaxOneHotGate{};
  if (type == "softmax_dots") {
    return mol::SoftmaxDotsGate{j.at("temperature").get<double>()};
  }
  throw mol::ArgumentError("config field 'gate.type' has unknown value '" +
                           type + "'");
}

mol::WorkloadDistribution parse_distribution_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "gaussian") {
    mol::GaussianDistribution g;
    g.mean = j.value("mean", 0.0);
    g.stddev = j.value("std", 1.0);
    return g;
  }
  if (type == "clustered") {
    mol::ClusteredDistribution c;
    c.n_clusters = j.value("n_clusters", 8);
    c.spread = j.value("spread", 0.1);
    return c;
  }
  throw mol::ArgumentError(
      "config field 'workload.distribution.type' has unknown value '" + type + "'");
}

mol::WorkloadSpec parse_workload_spec_json(const json& j) {
  mol::WorkloadSpec spec;
  spec.seed = j.value("seed", std::uint64_t(0));
  spec.n_items = j.at("n_items").get<std::int64_t>();
  spec.n_queries = j.at("n_queries").get<std::int64_t>();
  spec.config.query_components = j.at("p_q").get<int>();
  spec.config.item_components = j.at("p_x").get<int>();
  spec.config.dim = j.at("dim").get<int>();
  spec.config.normalized = j.value("normalized", false);
  if (j.contains("distribution")) {
    spec.distribution = parse_distribution_json(j.at("distribution"));
  }
  if (j.contains("gate")) spec.gate = parse_gate_json(j.at("gate"));
  return spec;
}

mol::MethodSpec parse_method_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  mol::MethodSpec m;
  if (type == "brute_force") {
    m.kind = mol::MethodTag::Kind::BruteForce;
  } else if (type == "exact") {
    m.kind = mol::MethodTag::Kind::Exact;
  } else if (type == "per_embedding") {
    m.kind = mol::MethodTag::Kind::PerEmbedding;
    m.n = j.at("n").get<std::int64_t>();
  } else if (type == "average") {
    m.kind = mol::MethodTag::Kind::Average;
    m.n = j.at("n").get<std::int64_t>();
  } else if (type == "combined") {
    m.kind = mol::MethodTag::Kind::Combined;
    m.n1 = j.at("n1").get<std::int64_t>();
    m.n2 = j.at("n2").get<std::int64_t>();
  } else {
    throw mol::ArgumentError("config field 'methods[].type' has unknown value '" +
                             type + "'");
  }
  return m;
}

mol::ExperimentConfig parse_experiment_config(const json& j) {
  mol::ExperimentConfig config;
  if (!j.contains("workload")) {
    throw mol::ArgumentError("config field 'workload' is required");
  }
  const json& w = j.at("workload");
  if (w.contains("index_path") || w.contains("queries_path")) {
    mol::FileWorkload files;
    if (!w.contains("index_path")) {
      throw mol::ArgumentError("config field 'workload.index_path' is required");
    }
    if (!w.contains("queries_path")) {
      throw mol::ArgumentError("config field 'workload.queries_path' is required");
    }
    files.index_path = w.at("index_path").get<std::string>();
    files.queries_path = w.at("queries_path").get<std::string>();
    config.workload = files;
  } else {
    config.workload = parse_workload_spec_json(w);
  }
  if (j.contains("gate")) config.gate = parse_gate_json(j.at("gate"));
  if (j.contains("k_values")) {
    config.k_values = j.at("k_values").get<std::vector<std::int64_t>>();
  }
  if (j.contains("methods")) {
    for (const auto& m : j.at("methods")) {
      config.methods.push_back(parse_method_json(m));
    }
  } else {
    config.methods = mol::default_method_sweep();
  }
  config.batch_size = j.value("batch_size", std::int64_t(32));
  config.warm_runs = j.value("warm_runs", std::int64_t(20));
  config.measured_runs = j.value("measured_runs", std::int64_t(20));
  config.threads = j.value("threads", 1);
  if (j.contains("output")) {
    config.output.path = j.at("output").value("path", std::string());
    config.output.format = j.at("output").value("format", std::string("csv"));
  }
  return config;
}

json report_to_json(const mol::ExperimentReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row;
    row["method"] = r.method;
    row["params"] = r.params;
    row["k"] = r.k;
    row["relative_hr"] = r.relative_hr;
    row["latency_ms_mean"] = r.latency_ms_mean;
    row["latency_ms_std"] = r.latency_ms_std;
    row["candidates_scored_mean"] = r.candidates_scored_mean;
    if (r.gap_bound_mean) {
      row["gap_bound_mean"] = *r.gap_bound_mean;
    } else {
      row["gap_bound_mean"] = nullptr;
    }
    rows.push_back(std::move(row));
  }
  return json{{"rows", rows}};
}

// Plain text matrix: first line "rows cols", then one whitespace-separated
// row per line. ".json" files hold an array of arrays instead.
Eigen::MatrixXd read_matrix_file(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream in(path);
    if (!in) throw mol::Error("cannot open matrix file '" + path + "'");
    json j;
    in >> j;
    const auto rows = j.size();
    if (rows == 0) throw mol::ArgumentError("matrix file holds no rows");
    const auto cols = j.at(0).size();
    Eigen::MatrixXd m(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
      if (j.at(i).size() != cols) {
        throw mol::ArgumentError("matrix rows have inconsistent lengths");
      }
      for (size_t c = 0; c < cols; ++c) m(long(i), long(c)) = j.at(i).at(c).get<double>();
    }
    return m;
  }
  std::ifstream in(path);
  if (!in) throw mol::Error("cannot open matrix file '" + path + "'");
  std::int64_t rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1) {
    throw mol::ArgumentError("matrix file must start with 'rows cols'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        throw mol::ArgumentError("matrix file ended early at row " +
                                 std::to_string(i));
      }
    }
  }
  return m;
}

int run_gen(const std::string& index_out, const std::string& queries_out,
            const mol::WorkloadSpec& spec) {
  mol::Workload w = mol::generate(spec);
  mol::write_index(w.index, index_out);
  mol::write_queries(w.queries, queries_out);
  std::cout << "wrote " << w.index.n_items << " items to " << index_out
            << " and " << w.queries.size() << " queries to " << queries_out
            << "\n";
  return kExitOk;
}

int run_bench(const std::string& config_path, const std::string& output_override,
              std::optional<std::uint64_t> seed_override) {
  std::ifstream in(config_path);
  if (!in) throw mol::Error("cannot open config file '" + config_path + "'");
  json j;
  in >> j;
  mol::ExperimentConfig config = parse_experiment_config(j);
  if (seed_override) {
    if (auto* spec = std::get_if<mol::WorkloadSpec>(&config.workload)) {
      spec->seed = *seed_override;
    }
  }
  if (!output_override.empty()) config.output.path = output_override;

  mol::ExperimentReport report = mol::run_experiment(config);

  std::ostringstream body;
  if (config.output.format == "json") {
    body << report_to_json(report).dump(2) << "\n";
  } else {
    report.write_csv(body);
  }
  if (config.output.path.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream out(config.output.path);
    if (!out) throw mol::Error("cannot open '" + config.output.path + "' for writing");
    out << body.str();
    std::cout << "wrote report to " << config.output.path << "\n";
  }
  return kExitOk;
}

int run_query(const std::string& index_path, const std::string& queries_path,
              std::int64_t row, std::int64_t k, const std::string& method_text,
              const std::string& gate_text) {
  auto loaded = mol::load_workload(index_path, queries_path);
  if (row < 0 || row >= std::int64_t(loaded.queries.size())) {
    throw mol::ArgumentError("query row " + std::to_string(row) +
                             " out of range (file has " +
                             std::to_string(loaded.queries.size()) + ")");
  }
  mol::GatingFunction gate = parse_gate_string(gate_text);
  const auto& query = loaded.queries[size_t(row)];

  mol::RetrievalResult result;
  if (method_text == "brute" || method_text == "brute_force") {
    result = mol::brute_force_topk(query, loaded.index, gate, k);
  } else if (method_text == "exact") {
    result = mol::exact_topk(query, loaded.index, gate, k).first;
  } else if (method_text.rfind("per_embedding:", 0) == 0) {
    result = mol::approx_topk(query, loaded.index, gate,
                              mol::ApproxParams::per_embedding(
                                  std::stoll(method_text.substr(14)), k));
  } else if (method_text.rfind("average:", 0) == 0) {
    result = mol::approx_topk(
        query, loaded.index, gate,
        mol::ApproxParams::average(std::stoll(method_text.substr(8)), k));
  } else if (method_text.rfind("combined:", 0) == 0) {
    const std::string rest = method_text.substr(9);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) {
      throw mol::ArgumentError("combined method expects combined:<n1>,<n2>");
    }
    result = mol::approx_topk(query, loaded.index, gate,
                              mol::ApproxParams::combined(
                                  std::stoll(rest.substr(0, comma)),
                                  std::stoll(rest.substr(comma + 1)), k));
  } else {
    throw mol::ArgumentError(
        "unknown method '" + method_text +
        "' (expected brute, exact, per_embedding:<n>, average:<n>, combined:<n1>,<n2>)");
  }

  std::cout << "method=" << result.method.describe()
            << " candidates_scored=" << result.candidates_scored << "\n";
  for (size_t i = 0; i < result.item_ids.size(); ++i) {
    std::cout << result.item_ids[i] << "\t" << result.scores[i] << "\n";
  }
  return kExitOk;
}

int run_decompose(const std::string& matrix_path, int d, double epsilon,
                  const std::string& output_path) {
  Eigen::MatrixXd a = read_matrix_file(matrix_path);
  mol::MolDecomposition dec = mol::decompose(a, d, epsilon);
  Eigen::MatrixXd recon = dec.reconstruct();
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-30);
  const double max_abs_err = (recon - a).cwiseAbs().maxCoeff();

  json cert;
  cert["rows"] = a.rows();
  cert["cols"] = a.cols();
  cert["d"] = dec.d;
  cert["transposed"] = dec.transposed;
  cert["rank_deficient"] = dec.rank_deficient;
  cert["lambda_min"] = dec.lambda_min;
  cert["lambda_max"] = dec.lambda_max;
  cert["pi_min"] = dec.pi.minCoeff();
  cert["pi_max"] = dec.pi.maxCoeff();
  cert["degenerate_entries"] = json::array();
  for (const auto& [i, jj] : dec.degenerate_entries) {
    cert["degenerate_entries"].push_back({i, jj});
  }
  cert["max_abs_error"] = max_abs_err;
  cert["max_error_relative_to_matrix_scale"] = max_abs_err / scale;

  const std::string text = cert.dump(2) + "\n";
  if (output_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(output_path);
    if (!out) throw mol::Error("cannot open '" + output_path + "' for writing");
    out << text;
    std::cout << "wrote certificate to " << output_path << "\n";
  }
  std::cout << "reconstruction max abs error " << max_abs_err << " ("
            << max_abs_err / scale << " of matrix scale), "
            << dec.degenerate_entries.size() << " degenerate entries\n";
  return kExitOk;
}

int run_verify(const std::string& seeds_text) {
  std::uint64_t first = 0, last = 0;
  const auto dots = seeds_text.find("..");
  if (dots == std::string::npos) {
    first = last = std::stoull(seeds_text);
  } else {
    first = std::stoull(seeds_text.substr(0, dots));
    last = std::stoull(seeds_text.substr(dots + 2));
  }
  if (last < first) throw mol::ArgumentError("seed range is empty");
  mol::VerifyOutcome outcome = mol::verify_seed_range(first, last, std::cout);
  std::cout << (outcome.ok() ? "verify: all checks passed"
                             : "verify: FAILURES detected")
            << " (" << outcome.checks - outcome.failures << "/"
            << outcome.checks << ")\n";
  return outcome.ok() ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixture-of-logits top-k retrieval toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic workload");
  mol::WorkloadSpec spec;
  std::string dist_name = "gaussian";
  double dist_mean = 0.0, dist_std = 1.0, dist_spread = 0.1;
  int dist_clusters = 8;
  std::string index_out = "index.mole", queries_out = "queries.molq";
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--items", spec.n_items, "number of items")->required();
  gen->add_option("--queries", spec.n_queries, "number of queries")->required();
  gen->add_option("--p-q", spec.config.query_components, "query-side components");
  gen->add_option("--p-x", spec.config.item_components, "item-side components");
  gen->add_option("--dim", spec.config.dim, "embedding dimension per component");
  gen->add_flag("--normalized", spec.config.normalized,
                "l2-normalize component dots");
  gen->add_option("--dist", dist_name, "gaussian | clustered");
  gen->add_option("--mean", dist_mean, "gaussian mean");
  gen->add_option("--std", dist_std, "gaussian stddev");
  gen->add_option("--clusters", dist_clusters, "clustered: number of clusters");
  gen->add_option("--spread", dist_spread, "clustered: in-cluster spread");
  gen->add_option("--index-out", index_out, "output index path");
  gen->add_option("--queries-out", queries_out, "output queries path");

  // bench
  auto* bench = app.add_subcommand("bench", "run an experiment from a JSON config");
  std::string config_path, bench_output;
  std::uint64_t bench_seed = 0;
  bool bench_seed_set = false;
  bench->add_option("--config", config_path, "JSON experiment config")->required();
  bench->add_option("--output", bench_output, "override report output path");
  bench->add_option("--seed", bench_seed, "override workload seed")
      ->each([&](const std::string&) { bench_seed_set = true; });

  // query
  auto* query = app.add_subcommand("query", "run one query and print the top-k");
  std::string q_index, q_queries, q_method = "brute", q_gate = "uniform";
  std::int64_t q_row = 0, q_k = 10;
  query->add_option("--index", q_index, "index file")->required();
  query->add_option("--queries", q_queries, "queries file")->required();
  query->add_option("--row", q_row, "query row");
  query->add_option("--k", q_k, "top-k");
  query->add_option("--method", q_method,
                    "brute | exact | per_embedding:<n> | average:<n> | combined:<n1>,<n2>");
  query->add_option("--gate", q_gate, "uniform | argmax | softmax:<t>");

  // decompose
  auto* decomp = app.add_subcommand("decompose",
                                    "decompose a matrix into a two-component mixture");
  std::string matrix_path, cert_out;
  int rank_d = 2;
  double epsilon = 1e-6;
  decomp->add_option("--matrix", matrix_path, "matrix file (text or .json)")->required();
  decomp->add_option("--d", rank_d, "target rank");
  decomp->add_option("--epsilon", epsilon, "degenerate-entry epsilon");
  decomp->add_option("--output", cert_out, "certificate output path (JSON)");

  // verify
  auto* verify = app.add_subcommand("verify", "run the invariant self-checks");
  std::string seeds_text = "0..3";
  verify->add_option("--seeds", seeds_text, "seed or range, e.g. 0..10");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      if (dist_name == "clustered") {
        spec.distribution = mol::ClusteredDistribution{dist_clusters, dist_spread};
      } else if (dist_name == "gaussian") {
        spec.distribution = mol::GaussianDistribution{dist_mean, dist_std};
      } else {
        throw mol::ArgumentError("--dist must be gaussian or clustered");
      }
      return run_gen(index_out, queries_out, spec);
    }
    if (bench->parsed()) {
      return run_bench(config_path, bench_output,
                       bench_seed_set ? std::optional<std::uint64_t>(bench_seed)
                                      : std::nullopt);
    }
    if (query->parsed()) {
      return run_query(q_index, q_queries, q_row, q_k, q_method, q_gate);
    }
    if (decomp->parsed()) {
      return run_decompose(matrix_path, rank_d, epsilon, cert_out);
    }
    if (verify->parsed()) {
      return run_verify(seeds_text);
    }
  } catch (const mol::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mol::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mol::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
