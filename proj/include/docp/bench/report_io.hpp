#pragma once

#include "docp/bench/study.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>

namespace docp {
namespace bench {

/// CSV cell formatting that round-trips doubles losslessly.
inline std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& columns)
      : out_(path) {
    if (!out_) throw Error("cannot open output file: " + path.string());
    for (std::size_t i = 0; i < columns.size(); ++i)
      out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path,
                       const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path.string());
  out << j.dump(2) << "\n";
}

inline void write_train_report(const std::filesystem::path& dir,
                               const std::string& name,
                               const TrainReport& report) {
  std::filesystem::create_directories(dir);
  CsvWriter csv(dir / (name + ".csv"),
                {"epoch", "objective", "model_distance", "wall_seconds",
                 "sqp_iters", "pcg_iters"});
  for (const auto& rec : report.records) {
    csv.row({std::to_string(rec.epoch), csv_number(rec.objective),
             rec.model_distance ? csv_number(*rec.model_distance) : "",
             csv_number(rec.wall_seconds), std::to_string(rec.sqp_iters),
             std::to_string(rec.pcg_iters)});
  }
}

inline void write_pcg_study(const std::filesystem::path& dir,
                            const PcgStudyReport& report) {
  std::filesystem::create_directories(dir);
  CsvWriter rows(dir / "pcg_study.csv",
                 {"tol", "step", "pass", "cold_iters", "warm_iters",
                  "cold_seconds", "warm_seconds"});
  for (const auto& r : report.rows) {
    rows.row({csv_number(r.tol), std::to_string(r.step), r.pass,
              std::to_string(r.cold_iters), std::to_string(r.warm_iters),
              csv_number(r.cold_seconds), csv_number(r.warm_seconds)});
  }
  CsvWriter summary(dir / "pcg_study_summary.csv",
                    {"tol", "pass", "frac_warm_not_worse",
                     "mean_iter_reduction", "speedup"});
  for (const auto& s : report.summaries) {
    summary.row({csv_number(s.tol), s.pass, csv_number(s.frac_warm_not_worse),
                 csv_number(s.mean_iter_reduction), csv_number(s.speedup)});
  }
}

inline void write_timing(const std::filesystem::path& dir,
                         const std::vector<TimingRecord>& records) {
  std::filesystem::create_directories(dir);
  CsvWriter csv(dir / "timing.csv",
                {"task", "repeats", "mean_seconds", "median_seconds",
                 "two_sigma_seconds", "total_sqp_iters", "total_pcg_iters"});
  for (const auto& r : records) {
    csv.row({r.task, std::to_string(r.repeats), csv_number(r.mean_seconds),
             csv_number(r.median_seconds), csv_number(r.two_sigma_seconds),
             std::to_string(r.total_sqp_iters),
             std::to_string(r.total_pcg_iters)});
  }
  CsvWriter histo(dir / "pcg_histogram.csv", {"task", "solve_index", "iters"});
  for (const auto& r : records) {
    for (std::size_t i = 0; i < r.pcg_iteration_histogram.size(); ++i)
      histo.row({r.task, std::to_string(i),
                 std::to_string(r.pcg_iteration_histogram[i])});
  }
}

}  // namespace bench
}  // namespace docp
