// structflow - command-line driver: parse, pre-analyse, solve and report.
//
// Exit codes: 0 ok, 1 parse error, 2 validation error, 3 budget exceeded,
// 4 internal invariant failure, 5 engines disagree (diff only).

#include "structflow/alias.hpp"
#include "structflow/dump.hpp"
#include "structflow/facts.hpp"
#include "structflow/gen.hpp"
#include "structflow/oracle.hpp"
#include "structflow/parser.hpp"
#include "structflow/pipeline.hpp"
#include "structflow/solver.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace structflow;
using json = nlohmann::ordered_json;

namespace {

enum Exit : int { kOk = 0, kParse = 1, kValidate = 2, kBudget = 3, kInternal = 4, kDisagree = 5 };

struct Failure {
  int code;
  std::string message;
};

struct RunConfig {
  std::vector<std::string> inputs;
  std::string mode = "mto-ss";
  std::uint64_t budget = 50'000'000;
  bool dump_state = false;
  bool dump_andersen = false;
  bool dump_vfg = false;
  std::string format = "json";
};

Mode parse_mode(const std::string &m) { return m == "sparse" ? Mode::Sparse : Mode::MtoSS; }

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Failure{kParse, path + ": cannot read file"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program load(const std::string &path) {
  ParseResult r = parse_program(read_file(path));
  if (r.ok())
    return std::move(*r.program);
  std::string msg;
  for (const Diagnostic &d : r.diagnostics)
    msg += path + ":" + format_diagnostic(d) + "\n";
  msg.pop_back();
  throw Failure{r.syntax_only() ? kParse : kValidate, msg};
}

// Runs `fn`, translating analysis exceptions to exit codes.
template <typename F> int guarded(F &&fn) {
  try {
    return fn();
  } catch (const Failure &f) {
    std::cerr << f.message << "\n";
    return f.code;
  } catch (const BudgetExceeded &e) {
    std::cerr << "error: budget exceeded: " << e.what() << "\n";
    return kBudget;
  } catch (const InvariantViolation &e) {
    std::cerr << "error: internal invariant failed: " << e.what() << "\n";
    return kInternal;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
}

std::vector<std::string> expand_inputs(const std::vector<std::string> &inputs) {
  std::vector<std::string> out;
  for (const std::string &p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<std::string> files;
      for (const auto &e : fs::directory_iterator(p))
        if (e.path().extension() == ".ir")
          files.push_back(e.path().string());
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty())
    return 0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

std::string fixed(double x, int prec = 3) {
  if (std::fabs(x) < 0.5 * std::pow(10.0, -prec))
    x = 0; // no "-0.000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

// analyze --------------------------------------------------------------------

int cmd_analyze(const RunConfig &cfg) {
  auto in = prepare(load(cfg.inputs.front()));
  SolveOptions opts;
  opts.mode = parse_mode(cfg.mode);
  opts.budget = cfg.budget;
  AnalysisState st = solve(*in, opts);
  AliasReport report = alias_report(*in, st);

  bool extra = cfg.dump_state || cfg.dump_andersen || cfg.dump_vfg;
  if (cfg.format == "text") {
    std::cout << report_text(report);
    if (cfg.dump_andersen)
      std::cout << "\n# andersen\n" << andersen_json(*in);
    if (cfg.dump_state)
      std::cout << "\n# state\n" << state_json(*in, st);
    if (cfg.dump_vfg)
      std::cout << "\n# vfg\n" << vfg_dot(*in);
    return kOk;
  }
  if (!extra) {
    std::cout << report_json(report);
    return kOk;
  }
  json out;
  out["report"] = json::parse(report_json(report));
  if (cfg.dump_andersen)
    out["andersen"] = json::parse(andersen_json(*in));
  if (cfg.dump_state)
    out["state"] = json::parse(state_json(*in, st));
  if (cfg.dump_vfg)
    out["vfg"] = vfg_dot(*in);
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// diff -----------------------------------------------------------------------

// Empty optional means agreement.
std::optional<std::string> diff_one(const std::string &path, Mode mode, std::uint64_t budget,
                                    std::string *dispatch) {
  auto in = prepare(load(path));
  SolveOptions opts;
  opts.mode = mode;
  opts.budget = budget;
  AnalysisState st = solve(*in, opts);
  FlowFacts sparse = facts_from_state(*in, st);
  FlowFacts dense = dense_solve(*in, mode, budget);
  if (dispatch) {
    std::ostringstream os;
    for (const auto &[label, fs] : st.callees) {
      const InstLoc &loc = in->program.loc(label);
      os << "  L" << label << " in " << in->program.functions[loc.func].name << ": {";
      for (std::size_t i = 0; i < fs.size(); ++i)
        os << (i ? ", " : "") << in->program.functions[fs[i]].name;
      os << "}\n";
    }
    *dispatch = os.str();
  }
  return first_divergence(*in, sparse, dense);
}

int cmd_diff(const RunConfig &cfg) {
  Mode mode = parse_mode(cfg.mode);
  std::vector<std::string> files = expand_inputs(cfg.inputs);
  if (files.size() == 1 && !fs::is_directory(cfg.inputs.front())) {
    std::string dispatch;
    auto d = diff_one(files.front(), mode, cfg.budget, &dispatch);
    if (d) {
      std::cout << "diverge: " << *d << "\n";
      return kDisagree;
    }
    std::cout << "agree\n";
    if (!dispatch.empty())
      std::cout << "calls:\n" << dispatch;
    return kOk;
  }
  std::size_t agree = 0;
  int worst = kOk;
  for (const std::string &f : files) {
    int rc = guarded([&] {
      auto d = diff_one(f, mode, cfg.budget, nullptr);
      if (d) {
        std::cout << f << ": diverge: " << *d << "\n";
        return int(kDisagree);
      }
      return int(kOk);
    });
    if (rc == kOk)
      ++agree;
    else
      worst = std::max(worst, rc);
  }
  std::cout << agree << "/" << files.size() << " agree\n";
  return agree == files.size() ? kOk : (worst == kDisagree ? kDisagree : worst);
}

// gen ------------------------------------------------------------------------

int cmd_gen(const GenConfig &base, int count, const std::string &out_dir) {
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    GenConfig c = base;
    c.seed = base.seed + static_cast<std::uint64_t>(i);
    char name[32];
    std::snprintf(name, sizeof name, "prog_%04d.ir", i);
    std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
    out << "; seed " << c.seed << "\n" << generate_text(c);
    if (!out)
      throw Failure{kInternal, std::string("cannot write ") + name};
  }
  std::cout << "wrote " << count << " programs to " << out_dir << "\n";
  return kOk;
}

// bench ----------------------------------------------------------------------

struct BenchRow {
  std::string name;
  double pre = 0, memssa = 0, sparse = 0, mto = 0;
  std::string digest;
};

std::string fnv(const std::string &s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BenchRow bench_one(const std::string &name, Program prog, int repeat, std::uint64_t budget) {
  BenchRow row;
  row.name = name;
  auto in = prepare(std::move(prog));
  row.pre = in->times.preanalysis_ms;
  row.memssa = in->times.memssa_ms;
  std::string reports;
  for (Mode mode : {Mode::Sparse, Mode::MtoSS}) {
    std::vector<double> times;
    AnalysisState st;
    for (int r = 0; r < repeat; ++r) {
      SolveOptions opts;
      opts.mode = mode;
      opts.budget = budget;
      auto t0 = std::chrono::steady_clock::now();
      st = solve(*in, opts);
      times.push_back(ms_since(t0));
    }
    (mode == Mode::Sparse ? row.sparse : row.mto) = median(times);
    reports += report_json(alias_report(*in, st));
  }
  row.digest = fnv(reports);
  return row;
}

int cmd_bench(const RunConfig &cfg, int gen_count, std::uint64_t seed, int repeat) {
  std::vector<BenchRow> rows;
  if (gen_count > 0) {
    for (int i = 0; i < gen_count; ++i) {
      GenConfig g;
      g.seed = seed + static_cast<std::uint64_t>(i);
      g.max_instructions = 60;
      rows.push_back(bench_one("seed " + std::to_string(g.seed), generate(g), repeat, cfg.budget));
    }
  }
  for (const std::string &f : expand_inputs(cfg.inputs))
    rows.push_back(bench_one(f, load(f), repeat, cfg.budget));
  if (rows.empty())
    throw Failure{kParse, "bench: no inputs"};

  std::vector<double> pre, mem, sp, mt, delta;
  std::string all;
  for (const BenchRow &r : rows) {
    pre.push_back(r.pre);
    mem.push_back(r.memssa);
    sp.push_back(r.sparse);
    mt.push_back(r.mto);
    delta.push_back(r.mto - r.sparse);
    all += r.digest;
  }
  double msp = median(sp), mmt = median(mt);
  double ratio = msp > 0 ? mmt / msp : 1.0;
  std::string digest = fnv(all);

  if (cfg.format == "text") {
    std::cout << "programs              " << rows.size() << "\n"
              << "median pre-analysis   " << fixed(median(pre)) << " ms\n"
              << "median memssa         " << fixed(median(mem)) << " ms\n"
              << "median solve sparse   " << fixed(msp) << " ms\n"
              << "median solve mto-ss   " << fixed(mmt) << " ms\n"
              << "median delta          " << fixed(median(delta)) << " ms\n"
              << "ratio mto-ss/sparse   " << fixed(ratio, 2) << "\n"
              << "results digest        " << digest << "\n";
    return kOk;
  }
  json out;
  out["programs"] = rows.size();
  out["median_ms"] = {{"preanalysis", median(pre)},
                      {"memssa", median(mem)},
                      {"solve_sparse", msp},
                      {"solve_mto_ss", mmt},
                      {"solve_delta", median(delta)}};
  out["ratio_mto_ss_over_sparse"] = ratio;
  out["results_digest"] = digest;
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// dump-layout ----------------------------------------------------------------

int cmd_dump_layout(const RunConfig &cfg) {
  Program prog = load(cfg.inputs.front());
  LayoutTable layouts(prog.types);
  std::cout << layouts_json(prog, layouts);
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Structure-flow-sensitive points-to analysis"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--mode", cfg.mode, "Analysis mode")->check(CLI::IsMember({"mto-ss", "sparse"}));
    sub->add_option("--budget", cfg.budget, "Node-visit budget");
    sub->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"json", "text"}));
  };

  CLI::App *analyze = app.add_subcommand("analyze", "Solve one program and print the alias report");
  analyze->add_option("input", cfg.inputs, "IR file")->required()->expected(1);
  add_common(analyze);
  analyze->add_flag("--dump-state", cfg.dump_state, "Include per-node points-to state");
  analyze->add_flag("--dump-andersen", cfg.dump_andersen, "Include the pre-analysis result");
  analyze->add_flag("--dump-vfg", cfg.dump_vfg, "Include the value-flow graph (dot)");

  CLI::App *diff = app.add_subcommand("diff", "Compare the sparse solver with the dense reference");
  diff->add_option("inputs", cfg.inputs, "IR files or directories")->required();
  add_common(diff);

  GenConfig gen_cfg;
  int gen_count = 1;
  std::string out_dir = "corpus";
  CLI::App *gen = app.add_subcommand("gen", "Write random programs");
  gen->add_option("--seed", gen_cfg.seed, "First seed");
  gen->add_option("--count", gen_count, "Number of programs")->check(CLI::NonNegativeNumber);
  gen->add_option("--out-dir", out_dir, "Output directory");
  gen->add_option("--max-instructions", gen_cfg.max_instructions, "Instruction cap per program")->check(CLI::PositiveNumber);
  gen->add_option("--max-types", gen_cfg.max_types, "Number of struct and class types")->check(CLI::NonNegativeNumber);
  gen->add_option("--p-cast", gen_cfg.p_cast, "Cast probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--p-field", gen_cfg.p_field, "Field or array access probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--p-store", gen_cfg.p_store, "Store probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--p-call", gen_cfg.p_call, "Call probability")->check(CLI::Range(0.0, 1.0));
  gen->add_flag("--loops", gen_cfg.allow_loops, "Allow loops");
  gen->add_flag("!--no-classes", gen_cfg.allow_classes, "Disable class hierarchies");

  int bench_gen = 0;
  std::uint64_t bench_seed = 1;
  int repeat = 3;
  CLI::App *bench = app.add_subcommand("bench", "Time each phase over a corpus");
  bench->add_option("inputs", cfg.inputs, "IR files or directories");
  bench->add_option("--gen", bench_gen, "Also bench this many generated programs");
  bench->add_option("--seed", bench_seed, "First generator seed for --gen");
  bench->add_option("--repeat", repeat, "Solves per mode per program")->check(CLI::PositiveNumber);
  add_common(bench);

  CLI::App *dump_layout = app.add_subcommand("dump-layout", "Print type layouts as JSON");
  dump_layout->add_option("input", cfg.inputs, "IR file")->required()->expected(1);

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed())
    return guarded([&] { return cmd_analyze(cfg); });
  if (diff->parsed())
    return guarded([&] { return cmd_diff(cfg); });
  if (gen->parsed())
    return guarded([&] { return cmd_gen(gen_cfg, gen_count, out_dir); });
  if (bench->parsed())
    return guarded([&] { return cmd_bench(cfg, bench_gen, bench_seed, repeat); });
  return guarded([&] { return cmd_dump_layout(cfg); });
}
