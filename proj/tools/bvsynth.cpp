// Command-line front end: solve one problem, generate a corpus, or bench a
// directory of problems.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bvsynth/corpus.hpp"
#include "bvsynth/driver.hpp"

namespace {

void add_budget_flags(CLI::App& cmd, bvsynth::SolveOptions& options) {
  cmd.add_option("--timeout", options.timeout_seconds, "Wall-clock limit in seconds (0 = none)")
      ->capture_default_str();
  cmd.add_option("--max-size", options.max_size, "Largest expression size to enumerate")->capture_default_str();
  cmd.add_option("--max-candidates", options.max_candidates, "Candidate budget per search")
      ->capture_default_str();
}

void print_stats(const bvsynth::RunStats& s) {
  std::cerr << "candidates " << s.candidates << '\n'
            << "signatures_stored " << s.signatures_stored << '\n'
            << "pruned_duplicates " << s.pruned_duplicates << '\n'
            << "evaluations " << s.evaluations << '\n'
            << "phase1_ms " << s.phase1_ms << '\n'
            << "phase2_ms " << s.phase2_ms << '\n'
            << "internal_nodes " << s.internal_nodes << '\n'
            << "solution_size " << s.solution_size << '\n'
            << "examples " << s.examples << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Programming-by-example synthesizer for bitvector functions"};
  app.require_subcommand(1);

  bvsynth::SolveOptions options;
  options.timeout_seconds = 300;

  std::string problem_file;
  bool stats = false;
  auto* solve_cmd = app.add_subcommand("solve", "Synthesize a function for one SyGuS problem file");
  solve_cmd->add_option("file", problem_file, "Problem file")->required();
  solve_cmd->add_flag("--stats", stats, "Print run statistics on stderr");
  add_budget_flags(*solve_cmd, options);

  bvsynth::CorpusSpec corpus;
  std::string out_dir;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random corpus of solvable problems");
  gen_cmd->add_option("--count", corpus.count)->capture_default_str();
  gen_cmd->add_option("--seed", corpus.seed)->capture_default_str();
  gen_cmd->add_option("--size-min", corpus.size_min)->capture_default_str();
  gen_cmd->add_option("--size-max", corpus.size_max)->capture_default_str();
  gen_cmd->add_option("--examples", corpus.examples)->capture_default_str();
  gen_cmd->add_option("--width", corpus.width)->capture_default_str()->check(CLI::Range(1, 64));
  gen_cmd->add_option("--template", corpus.grammar_template, "Grammar template")
      ->capture_default_str()
      ->check(CLI::IsMember({"icfp", "smtlib"}));
  gen_cmd->add_option("--out", out_dir, "Output directory")->required();

  std::string bench_dir;
  std::string csv_path;
  std::string solutions_dir;
  unsigned jobs = 1;
  auto* bench_cmd = app.add_subcommand("bench", "Solve every problem in a directory");
  bench_cmd->add_option("dir", bench_dir, "Directory of problem files")->required()->check(CLI::ExistingDirectory);
  bench_cmd->add_option("--csv", csv_path, "Write per-file results as CSV");
  bench_cmd->add_option("--solutions", solutions_dir, "Write each solution to <dir>/<file>.sol");
  bench_cmd->add_option("--jobs", jobs, "Problems solved concurrently")->capture_default_str();
  add_budget_flags(*bench_cmd, options);

  CLI11_PARSE(app, argc, argv);

  if (*solve_cmd) {
    const auto outcome = bvsynth::solve_file(problem_file, options);
    if (outcome.exit_code == bvsynth::kExitSolved) {
      std::cout << outcome.solution << '\n';
      if (stats) print_stats(outcome.stats);
    } else {
      std::cerr << outcome.diagnostic << '\n';
    }
    return outcome.exit_code;
  }

  if (*gen_cmd) {
    try {
      for (const auto& file : bvsynth::generate_corpus(corpus, out_dir)) std::cout << file.string() << '\n';
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return 2;
    }
    return 0;
  }

  const auto rows = bvsynth::bench(bench_dir, options, jobs);
  std::cout << bvsynth::bench_table(rows);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::binary);
    csv << bvsynth::bench_csv(rows);
  }
  if (!solutions_dir.empty()) {
    std::filesystem::create_directories(solutions_dir);
    for (const auto& row : rows) {
      if (row.outcome.exit_code != bvsynth::kExitSolved) continue;
      std::ofstream sol(std::filesystem::path(solutions_dir) / (row.file + ".sol"), std::ios::binary);
      sol << row.outcome.solution << '\n';
    }
  }
  return 0;
}
