#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "error.hpp"
#include "problem.hpp"
#include "solver.hpp"
#include "unifier.hpp"

namespace bvsynth {

// Exit codes of `solve`.
inline constexpr int kExitSolved = 0;
inline constexpr int kExitUnsolved = 1;
inline constexpr int kExitInputError = 2;

struct FileOutcome {
  int exit_code = kExitInputError;
  std::string status;      // solved | budget | unsolvable | error | unreadable
  std::string solution;    // emit_solution text on success
  std::string diagnostic;  // one line on failure
  RunStats stats;
  double millis = 0;
};

inline bool read_file(const std::filesystem::path& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return static_cast<bool>(in) || in.eof();
}

inline FileOutcome solve_text(std::string_view text, const SolveOptions& options) {
  FileOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Problem problem = parse_problem(text);
    Solution solution = solve(problem, options);
    out.exit_code = kExitSolved;
    out.status = "solved";
    out.solution = emit_solution(problem, solution.expr);
    out.stats = solution.stats;
  } catch (const SearchFailure& e) {
    out.exit_code = kExitUnsolved;
    out.status = e.status() == SearchStatus::Exhausted ? "unsolvable" : "budget";
    out.diagnostic = e.what();
  } catch (const Error& e) {
    out.exit_code = is_input_error(e.kind()) ? kExitInputError : kExitUnsolved;
    out.status = is_input_error(e.kind()) ? "error" : "unsolvable";
    out.diagnostic = e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitUnsolved;
    out.status = "error";
    out.diagnostic = e.what();
  }
  out.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline FileOutcome solve_file(const std::filesystem::path& path, const SolveOptions& options) {
  std::string text;
  if (!read_file(path, text)) {
    FileOutcome out;
    out.status = "unreadable";
    out.diagnostic = "cannot read " + path.string();
    return out;
  }
  return solve_text(text, options);
}

struct BenchRow {
  std::string file;
  FileOutcome outcome;
};

struct BenchSummary {
  std::size_t total = 0;
  std::size_t solved = 0;
  double mean_millis = 0;
  double median_millis = 0;
};

// Solves every regular file in `dir` (sorted by name). Rows come back in
// file order regardless of `jobs`.
inline std::vector<BenchRow> bench(const std::filesystem::path& dir, const SolveOptions& options,
                                   unsigned jobs = 1) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<BenchRow> rows(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++)
      rows[i] = BenchRow{files[i].filename().string(), solve_file(files[i], options)};
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

// Mean and median are over all rows' wall times.
inline BenchSummary summarize(const std::vector<BenchRow>& rows) {
  BenchSummary s;
  s.total = rows.size();
  std::vector<double> times;
  for (const auto& row : rows) {
    if (row.outcome.exit_code == kExitSolved) ++s.solved;
    times.push_back(row.outcome.millis);
  }
  if (times.empty()) return s;
  for (double t : times) s.mean_millis += t;
  s.mean_millis /= static_cast<double>(times.size());
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  s.median_millis = times.size() % 2 ? times[mid] : (times[mid - 1] + times[mid]) / 2;
  return s;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "file,status,millis,solution_size,internal_nodes,candidates\n";
  for (const auto& row : rows) {
    const auto& o = row.outcome;
    out << row.file << ',' << o.status << ',' << std::fixed << std::setprecision(3) << o.millis << ','
        << o.stats.solution_size << ',' << o.stats.internal_nodes << ',' << o.stats.candidates << '\n';
  }
  return out.str();
}

inline std::string bench_table(const std::vector<BenchRow>& rows) {
  std::size_t name_width = 4;
  for (const auto& row : rows) name_width = std::max(name_width, row.file.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "file" << "  " << std::setw(10) << "status"
      << std::right << std::setw(12) << "millis" << std::setw(8) << "size" << std::setw(8) << "nodes"
      << std::setw(12) << "candidates" << '\n';
  for (const auto& row : rows) {
    const auto& o = row.outcome;
    out << std::left << std::setw(static_cast<int>(name_width)) << row.file << "  " << std::setw(10) << o.status
        << std::right << std::setw(12) << std::fixed << std::setprecision(2) << o.millis << std::setw(8)
        << o.stats.solution_size << std::setw(8) << o.stats.internal_nodes << std::setw(12) << o.stats.candidates
        << '\n';
  }
  const BenchSummary s = summarize(rows);
  out << "solved " << s.solved << "/" << s.total << "  mean " << std::fixed << std::setprecision(2)
      << s.mean_millis << " ms  median " << s.median_millis << " ms\n";
  return out.str();
}

}  // namespace bvsynth
