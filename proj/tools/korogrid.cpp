// Command-line front end: sparse grids, compiled networks and studies.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "korogrid/acceptance.hpp"
#include "korogrid/constructions.hpp"
#include "korogrid/grid_io.hpp"
#include "korogrid/harness.hpp"

namespace {

using namespace korogrid;

/// Raised for invalid flag combinations detected after parsing (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 20240601;
  unsigned threads = 0;
  int max_n = 14;
  int max_d = 6;
  bool no_timing = false;
};

struct FunctionArgs {
  std::string name = "poly2";
  int d = 1;
  bool normalize = false;
};

void add_function_flags(CLI::App* cmd, FunctionArgs& f) {
  cmd->add_option("--function", f.name, "registered test function (poly2, sinprod, basis)")->required();
  cmd->add_option("--d", f.d, "dimension")->check(CLI::PositiveNumber);
  cmd->add_flag("--normalize", f.normalize, "scale the function to unit Korobov seminorm");
}

nlohmann::json tool_info() { return {{"name", kToolName}, {"version", kToolVersion}}; }

TestFunction resolve(const FunctionArgs& f, const Globals& g) {
  if (f.d > g.max_d) throw std::invalid_argument("--d exceeds --max-d");
  TestFunction tf = make_test_function(f.name, f.d);
  return f.normalize ? normalized(tf) : tf;
}

StudyConfig study_config(const Globals& g, Scheme scheme) {
  StudyConfig c;
  c.scheme = scheme;
  c.seed = g.seed;
  c.threads = g.threads;
  c.max_n = g.max_n;
  c.max_d = g.max_d;
  c.record_timing = !g.no_timing;
  return c;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_json(const std::string& path, const nlohmann::json& doc) { write_text(path, doc.dump(1) + "\n"); }

Point parse_point(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size()) throw UsageError("malformed --point component '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw UsageError("--point is empty");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

void check_distinct(const std::string& in, const std::string& out) {
  if (!in.empty() && in == out) throw UsageError("input and output paths must differ");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"korogrid: sparse-grid interpolants compiled into deep ReLU networks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "sampling seed (KOROGRID_SEED overrides)");
  app.add_option("--threads", g.threads, "worker threads, 0 = all cores");
  app.add_option("--max-n", g.max_n, "resolution cap for studies")->check(CLI::PositiveNumber);
  app.add_option("--max-d", g.max_d, "dimension cap")->check(CLI::PositiveNumber);
  app.add_flag("--no-timing", g.no_timing, "write wall_ms as 0 for byte-stable study output");
  app.set_version_flag("--version", std::string(kToolVersion));

  // grid
  auto* grid = app.add_subcommand("grid", "sparse-grid interpolants")->require_subcommand(1);
  FunctionArgs grid_fn;
  int level = 1;
  std::string scheme_name = "sparse", out_path, grid_path, net_path, point_text;
  auto* grid_build = grid->add_subcommand("build", "hierarchize a registered function");
  add_function_flags(grid_build, grid_fn);
  grid_build->add_option("--level", level, "resolution n")->required()->check(CLI::PositiveNumber);
  grid_build->add_option("--scheme", scheme_name, "sparse | full")->check(CLI::IsMember({"sparse", "full"}));
  grid_build->add_option("--out", out_path, "output interpolant JSON")->required();

  auto* grid_eval = grid->add_subcommand("eval", "evaluate an interpolant at a point");
  grid_eval->add_option("--grid", grid_path, "interpolant JSON")->required();
  grid_eval->add_option("--point", point_text, "comma-separated coordinates")->required();

  auto* grid_info = grid->add_subcommand("info", "summarize an interpolant");
  grid_info->add_option("grid,--grid", grid_path, "interpolant JSON")->required();

  auto* grid_verify = grid->add_subcommand("verify", "check invariants of an interpolant");
  grid_verify->add_option("grid,--grid", grid_path, "interpolant JSON")->required();
  FunctionArgs verify_fn;
  grid_verify->add_option("--function", verify_fn.name, "function the grid was built from");
  grid_verify->add_flag("--normalize", verify_fn.normalize, "function was normalized");

  // net
  auto* net = app.add_subcommand("net", "compiled ReLU networks")->require_subcommand(1);
  double eps = 0.0;
  auto* net_compile = net->add_subcommand("compile", "compile an interpolant into a network");
  net_compile->add_option("--grid", grid_path, "interpolant JSON")->required();
  net_compile->add_option("--eps", eps, "target accuracy in (0,1)")->required();
  net_compile->add_option("--out", out_path, "output network JSON")->required();

  auto* net_auto = net->add_subcommand("compile-auto", "choose n from measured grid error, then compile");
  FunctionArgs auto_fn;
  add_function_flags(net_auto, auto_fn);
  net_auto->add_option("--eps", eps, "target accuracy in (0,1)")->required();
  net_auto->add_option("--scheme", scheme_name, "sparse | full")->check(CLI::IsMember({"sparse", "full"}));
  net_auto->add_option("--out", out_path, "output network JSON")->required();
  std::string grid_out;
  net_auto->add_option("--grid-out", grid_out, "also write the selected interpolant");

  auto* net_eval = net->add_subcommand("eval", "evaluate a network at a point");
  net_eval->add_option("--net", net_path, "network JSON")->required();
  net_eval->add_option("--point", point_text, "comma-separated coordinates")->required();

  auto* net_stats = net->add_subcommand("stats", "depth, size and weight count");
  net_stats->add_option("net,--net", net_path, "network JSON")->required();

  // study
  auto* study = app.add_subcommand("study", "convergence and scaling studies")->require_subcommand(1);
  FunctionArgs study_fn;
  int n_min = 1, n_max = 8;
  std::vector<double> eps_list;
  auto* study_conv = study->add_subcommand("convergence", "sup error versus resolution");
  add_function_flags(study_conv, study_fn);
  study_conv->add_option("--n-min", n_min, "first resolution")->check(CLI::PositiveNumber);
  study_conv->add_option("--n-max", n_max, "last resolution")->check(CLI::PositiveNumber);
  study_conv->add_option("--scheme", scheme_name, "sparse | full")->check(CLI::IsMember({"sparse", "full"}));
  study_conv->add_option("--out", out_path, "CSV output (sidecar: <out>.json)")->required();

  auto* study_net = study->add_subcommand("network", "network depth/size/error versus eps");
  add_function_flags(study_net, study_fn);
  study_net->add_option("--eps", eps_list, "comma-separated accuracies")->required()->delimiter(',');
  study_net->add_option("--out", out_path, "CSV output (sidecar: <out>.json)")->required();

  auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (const char* env = std::getenv("KOROGRID_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*env == '\0' || *end != '\0') {
      std::cerr << "error: KOROGRID_SEED must be an unsigned integer\n";
      return 2;
    }
    g.seed = v;
  }

  const nlohmann::json globals = {{"seed", g.seed}, {"threads", g.threads}, {"max_n", g.max_n}, {"max_d", g.max_d}};

  try {
    if (*grid_build) {
      const TestFunction tf = resolve(grid_fn, g);
      require_boundary_zero(tf, g.seed);
      const Scheme scheme = scheme_from_string(scheme_name);
      const auto interp = hierarchize(tf.eval, tf.dimension, level, scheme);
      nlohmann::json doc = serialize(interp);
      doc["tool"] = tool_info();
      doc["config"] = {{"command", "grid build"}, {"function", tf.name}, {"d", tf.dimension}, {"level", level},
                       {"scheme", scheme_name},   {"normalize", grid_fn.normalize}, {"scale", tf.scale},
                       {"globals", globals}};
      if (tf.seminorm) doc["config"]["seminorm"] = *tf.seminorm;
      write_json(out_path, doc);
      std::cout << "wrote " << out_path << " (" << interp.term_count() << " terms)\n";
    } else if (*grid_eval) {
      const auto interp = deserialize_interpolant(read_json(grid_path));
      std::cout << fmt(interp.evaluate(parse_point(point_text))) << "\n";
    } else if (*grid_info) {
      const auto doc = read_json(grid_path);
      const auto interp = deserialize_interpolant(doc);
      double max_abs = 0.0;
      for (const auto& t : interp.terms()) max_abs = std::max(max_abs, std::abs(t.coefficient));
      std::cout << "d " << interp.dimension() << "\n"
                << "n " << interp.resolution() << "\n"
                << "scheme " << to_string(interp.scheme()) << "\n"
                << "terms " << interp.term_count() << "\n"
                << "subspaces " << interp.subspaces().size() << "\n"
                << "max_abs_coefficient " << fmt(max_abs) << "\n";
      if (doc.contains("config")) std::cout << "config " << doc["config"].dump() << "\n";
    } else if (*grid_verify) {
      const auto doc = read_json(grid_path);
      const auto interp = deserialize_interpolant(doc);
      bool ok = interp.term_count() == count_points(interp.dimension(), interp.resolution(), interp.scheme());
      std::cout << "term_count " << interp.term_count() << (ok ? " ok" : " MISMATCH") << "\n";
      if (!verify_fn.name.empty()) {
        FunctionArgs f = verify_fn;
        f.d = interp.dimension();
        const TestFunction tf = resolve(f, g);
        double worst = 0.0;
        for (const auto& t : interp.terms()) {
          const Point x = t.index.grid_point();
          worst = std::max(worst, std::abs(interp.evaluate(x) - tf(x)));
        }
        const bool interp_ok = worst <= 1e-12;
        std::cout << "interpolation_max_deviation " << fmt(worst) << (interp_ok ? " ok" : " FAIL") << "\n";
        ok = ok && interp_ok;
        if (tf.seminorm) {
          const DecayAudit audit = audit_decay(interp, *tf.seminorm);
          std::cout << "decay_violations " << audit.violations << "/" << audit.checked
                    << (audit.violations == 0 ? " ok" : " FAIL") << "\n";
          ok = ok && audit.violations == 0;
        }
      }
      if (!ok) return 1;
    } else if (*net_compile) {
      check_distinct(grid_path, out_path);
      const auto interp = deserialize_interpolant(read_json(grid_path));
      ReluNetwork compiled = compile_sparse_grid_net(interp, eps);
      compiled.metadata()["tool"] = tool_info();
      compiled.metadata()["config"] = {{"command", "net compile"}, {"grid", grid_path}, {"eps", eps}, {"globals", globals}};
      write_json(out_path, serialize(compiled));
      const NetworkStats s = stats(compiled);
      std::cout << "wrote " << out_path << " (depth " << s.depth << ", size " << s.size << ")\n";
    } else if (*net_auto) {
      check_distinct(grid_out, out_path);
      const TestFunction tf = resolve(auto_fn, g);
      const auto result = compile_auto(tf, eps, study_config(g, scheme_from_string(scheme_name)));
      if (!result.network) throw std::runtime_error("auto-selection cap reached (n > " + std::to_string(g.max_n) + ")");
      ReluNetwork compiled = *result.network;
      compiled.metadata()["tool"] = tool_info();
      compiled.metadata()["config"] = {{"command", "net compile-auto"}, {"function", tf.name}, {"d", tf.dimension},
                                       {"eps", eps},                    {"normalize", auto_fn.normalize},
                                       {"scheme", scheme_name},         {"globals", globals}};
      write_json(out_path, serialize(compiled));
      if (!grid_out.empty()) {
        nlohmann::json doc = serialize(*result.interpolant);
        doc["tool"] = tool_info();
        doc["config"] = compiled.metadata()["config"];
        write_json(grid_out, doc);
      }
      const NetworkStats s = stats(compiled);
      std::cout << "n " << result.n << "\n"
                << "grid_error " << fmt(result.grid_error) << "\n"
                << "total_error " << fmt(result.total_error) << "\n"
                << "depth " << s.depth << "\n"
                << "size " << s.size << "\n";
      if (result.total_error > eps) {
        std::cerr << "error: measured total error exceeds eps\n";
        return 1;
      }
    } else if (*net_eval) {
      const ReluNetwork n = deserialize(read_json(net_path));
      const Eigen::VectorXd y = eval_network(n, parse_point(point_text));
      for (Eigen::Index r = 0; r < y.size(); ++r) std::cout << (r ? "," : "") << fmt(y[r]);
      std::cout << "\n";
    } else if (*net_stats) {
      const ReluNetwork n = deserialize(read_json(net_path));
      const NetworkStats s = stats(n);
      std::cout << "depth " << s.depth << "\n"
                << "size " << s.size << "\n"
                << "total_units " << s.total_units << "\n"
                << "weight_count " << s.weight_count << "\n";
      const auto& meta = n.metadata();
      if (meta.contains("predicted")) {
        const auto& p = meta["predicted"];
        std::cout << "predicted_depth " << p.value("depth", 0) << "\n"
                  << "predicted_size " << p.value("size", std::int64_t{0}) << "\n";
      }
    } else if (*study_conv || *study_net) {
      const TestFunction tf = resolve(study_fn, g);
      StudyTable table;
      if (*study_conv) {
        if (n_min > n_max) throw UsageError("--n-min must not exceed --n-max");
        std::vector<int> range;
        for (int n = n_min; n <= n_max; ++n) range.push_back(n);
        table = grid_convergence_study(tf, range, study_config(g, scheme_from_string(scheme_name)));
      } else {
        table = network_scaling_study(tf, eps_list, study_config(g, Scheme::sparse));
      }
      std::ostringstream csv;
      write_csv(table, csv);
      write_text(out_path, csv.str());
      nlohmann::json sidecar = study_sidecar(table);
      sidecar["config"]["normalize"] = study_fn.normalize;
      sidecar["config"]["globals"] = globals;
      write_json(out_path + ".json", sidecar);
      std::cout << csv.str();
      for (const auto& row : table.rows)
        if (!row.ok) {
          std::cerr << "error: row " << fmt(row.control) << ": " << row.note << "\n";
          return 1;
        }
    } else if (*selftest) {
      acceptance::Options options;
      options.seed = g.seed;
      options.threads = g.threads;
      int failed = 0;
      for (const auto& r : acceptance::run_all(options)) {
        std::cout << acceptance::format(r) << std::endl;
        if (!r.passed) ++failed;
      }
      return failed == 0 ? 0 : 1;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
