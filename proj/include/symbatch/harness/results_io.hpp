#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "symbatch/core/csv.hpp"
#include "symbatch/core/error.hpp"
#include "symbatch/harness/experiment.hpp"

// Result files: a block of `# meta: key=value` lines, a header row, then data.
//   sweeps:        h,rmse,stderr,epochs,wallclock_s
//   trajectories:  epoch,rmse,stderr
// Diverged sweep rows carry nan in rmse and stderr.

namespace symbatch {

inline constexpr std::string_view kSweepHeader = "h,rmse,stderr,epochs,wallclock_s";
inline constexpr std::string_view kTrajectoryHeader = "epoch,rmse,stderr";

namespace detail {

inline void write_meta(std::ostream& out, const Metadata& meta) {
  for (const auto& [k, v] : meta) out << "# meta: " << k << '=' << v << '\n';
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

/// Collects meta lines up to and including the header row.
inline void read_preamble(std::istream& in, Metadata& meta, std::string_view expected_header) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = csv::trim(line);
    if (t.empty()) continue;
    if (t.starts_with("#")) {
      constexpr std::string_view tag = "# meta: ";
      if (t.starts_with(tag)) {
        const auto body = t.substr(tag.size());
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ParseError("line " + std::to_string(line_no) + ": meta line without '='");
        meta.emplace_back(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
      }
      continue;
    }
    if (t != expected_header)
      throw ParseError("line " + std::to_string(line_no) + ": expected header '" + std::string(expected_header) + "'");
    return;
  }
  throw ParseError("missing header '" + std::string(expected_header) + "'");
}

inline double field_double(std::string_view f, std::size_t line_no, const char* column) {
  const auto v = csv::parse_double(f);
  if (!v) throw ParseError("line " + std::to_string(line_no) + ": column " + column + " is not a number");
  return *v;
}

}  // namespace detail

inline void write_csv(const SweepResult& result, std::ostream& out) {
  Metadata meta = result.metadata;
  if (result.fit) {
    meta.emplace_back("fitted_slope", csv::format_double(result.fit->slope));
    meta.emplace_back("fitted_intercept", csv::format_double(result.fit->intercept));
  } else {
    meta.emplace_back("fitted_slope", "undefined");
  }
  detail::write_meta(out, meta);
  out << kSweepHeader << '\n';
  for (const auto& r : result.rows)
    out << csv::format_double(r.h) << ',' << csv::format_double(r.rmse) << ',' << csv::format_double(r.stderr_)
        << ',' << r.epochs << ',' << csv::format_double(r.wallclock_s) << '\n';
}

inline void write_csv(const SweepResult& result, const std::string& path) {
  auto out = detail::open_for_write(path);
  write_csv(result, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

/// Parses a sweep file. The fit is recomputed from the rows; metadata is
/// returned without the fitted_* entries.
inline SweepResult read_sweep_csv(std::istream& in) {
  SweepResult result;
  detail::read_preamble(in, result.metadata, kSweepHeader);
  std::erase_if(result.metadata, [](const auto& kv) { return kv.first.starts_with("fitted_"); });
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = csv::trim(line);
    if (t.empty()) continue;
    const auto f = csv::split(t);
    if (f.size() != 5) throw ParseError("data line " + std::to_string(line_no) + ": expected 5 fields");
    SweepRow r;
    r.h = detail::field_double(f[0], line_no, "h");
    r.rmse = detail::field_double(f[1], line_no, "rmse");
    r.stderr_ = detail::field_double(f[2], line_no, "stderr");
    r.epochs = static_cast<std::size_t>(detail::field_double(f[3], line_no, "epochs"));
    r.wallclock_s = detail::field_double(f[4], line_no, "wallclock_s");
    r.diverged = std::isnan(r.rmse);
    result.rows.push_back(r);
  }
  refit(result);
  return result;
}

inline SweepResult read_sweep_csv(const std::string& path) {
  auto in = detail::open_for_read(path);
  try {
    return read_sweep_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_trajectory_csv(const Trajectory& t, std::ostream& out) {
  detail::write_meta(out, t.metadata);
  out << kTrajectoryHeader << '\n';
  for (const auto& r : t.rows)
    out << r.epoch << ',' << csv::format_double(r.rmse) << ',' << csv::format_double(r.stderr_) << '\n';
}

inline void write_trajectory_csv(const Trajectory& t, const std::string& path) {
  auto out = detail::open_for_write(path);
  write_trajectory_csv(t, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline Trajectory read_trajectory_csv(std::istream& in) {
  Trajectory t;
  detail::read_preamble(in, t.metadata, kTrajectoryHeader);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = csv::trim(line);
    if (s.empty()) continue;
    const auto f = csv::split(s);
    if (f.size() != 3) throw ParseError("data line " + std::to_string(line_no) + ": expected 3 fields");
    t.rows.push_back({static_cast<std::size_t>(detail::field_double(f[0], line_no, "epoch")),
                      detail::field_double(f[1], line_no, "rmse"), detail::field_double(f[2], line_no, "stderr")});
  }
  return t;
}

inline Trajectory read_trajectory_csv(const std::string& path) {
  auto in = detail::open_for_read(path);
  try {
    return read_trajectory_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace symbatch
